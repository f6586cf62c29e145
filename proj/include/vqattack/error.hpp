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

#pragma once

#include <stdexcept>
#include <string>

namespace vqattack {

// Every failure the library reports carries one of these codes. The values
// mirror the vqa_status enum of the C API one-to-one.
enum class Errc {
    invalid_argument = 1,
    malformed_header,
    unsupported_maxval,
    truncated_payload,
    bad_magic,
    version_mismatch,
    length_mismatch,
    dimension_mismatch,
    codebook_mismatch,
    index_out_of_range,
    insufficient_data,
    numeric_failure,
    shape_mismatch,
    oracle_timeout,
    oracle_transport,
    oracle_protocol,
    budget_exhausted,
    io,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// True for the failures that originate on the far side of an oracle.
inline bool is_oracle_error(Errc code) noexcept
{
    return code == Errc::oracle_timeout || code == Errc::oracle_transport ||
           code == Errc::oracle_protocol;
}

}  // namespace vqattack
