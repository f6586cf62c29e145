// Copyright 2026 The vqattack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vqattack/error.hpp"

namespace vqattack {

const char* errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::malformed_header: return "malformed_header";
    case Errc::unsupported_maxval: return "unsupported_maxval";
    case Errc::truncated_payload: return "truncated_payload";
    case Errc::bad_magic: return "bad_magic";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::codebook_mismatch: return "codebook_mismatch";
    case Errc::index_out_of_range: return "index_out_of_range";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::numeric_failure: return "numeric_failure";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::oracle_timeout: return "oracle_timeout";
    case Errc::oracle_transport: return "oracle_transport";
    case Errc::oracle_protocol: return "oracle_protocol";
    case Errc::budget_exhausted: return "budget_exhausted";
    case Errc::io: return "io";
    }
    return "unknown";
}

}  // namespace vqattack
