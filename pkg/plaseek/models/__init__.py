# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Models contain the pydantic models that serve as schemas."""
