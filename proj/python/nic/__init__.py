# Copyright 2026 The NIC Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Learned image codec with per-image decoder bias overfitting."""

from ._nic import (
    NumericError,
    ParseError,
    Zoo,
    bd_rate,
    container_info,
    decode_symbols,
    encode_symbols,
    fit_truncated_gaussian,
    psnr,
    read_png,
    write_png,
)

__all__ = [
    "NumericError",
    "ParseError",
    "Zoo",
    "bd_rate",
    "container_info",
    "decode_symbols",
    "encode_symbols",
    "fit_truncated_gaussian",
    "psnr",
    "read_png",
    "write_png",
]
