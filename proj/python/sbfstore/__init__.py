# Copyright 2026 The sbfstore Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Searchable storage Bloom filter: secure indexes over sealed records."""

from ._core import *  # noqa: F401,F403
from ._core import (
    CapacityError,
    CryptoError,
    FormatError,
    InvalidArgument,
    NotFound,
    SbfError,
    ServerError,
    TransportError,
)


def tokens(texts, n_bits=160):
    """Canonical tokens for a list of strings."""
    return [make_token(t, n_bits) for t in texts]  # noqa: F405


__all__ = [name for name in dir() if not name.startswith("_")]
