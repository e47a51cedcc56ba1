# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
