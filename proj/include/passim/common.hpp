// SPDX-License-Identifier: Apache-2.0
//
// passim — pinching-antenna system simulation and channel estimation toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PASSIM_COMMON_HPP
#define PASSIM_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace passim {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;

/// Invalid or inconsistent configuration (bad field values, unknown keys, ...).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

/// A model was asked to handle more antennas than its architecture admits.
class CapacityError : public std::runtime_error {
  public:
    explicit CapacityError(const std::string &what) : std::runtime_error(what) {}
};

/// Zero point-to-point distance where a 1/r law is evaluated.
class SingularityError : public std::runtime_error {
  public:
    explicit SingularityError(const std::string &what) : std::runtime_error(what) {}
};

/// Estimation cannot proceed (rank deficiency, singular system, too few samples).
class EstimationError : public std::runtime_error {
  public:
    explicit EstimationError(const std::string &what) : std::runtime_error(what) {}
};

/// Malformed switching schedule (e.g. a slot with no active antenna).
class ScheduleError : public std::runtime_error {
  public:
    explicit ScheduleError(const std::string &what) : std::runtime_error(what) {}
};

/// Tensor shape mismatch; the message names the primitive and both shapes.
class ShapeError : public std::runtime_error {
  public:
    explicit ShapeError(const std::string &what) : std::runtime_error(what) {}
};

/// File I/O failure with a machine-readable failure class.
class IoError : public std::runtime_error {
  public:
    enum class Code {
        open_failed,
        write_failed,
        bad_magic,
        version_mismatch,
        truncated,
        malformed,
    };

    IoError(Code code, const std::string &what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

    static const char *code_name(Code c) {
        switch (c) {
        case Code::open_failed: return "open_failed";
        case Code::write_failed: return "write_failed";
        case Code::bad_magic: return "bad_magic";
        case Code::version_mismatch: return "version_mismatch";
        case Code::truncated: return "truncated";
        case Code::malformed: return "malformed";
        }
        return "unknown";
    }

  private:
    Code code_;
};

} // namespace passim

#endif // PASSIM_COMMON_HPP
