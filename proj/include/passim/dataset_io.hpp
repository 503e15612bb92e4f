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

#ifndef PASSIM_DATASET_IO_HPP
#define PASSIM_DATASET_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "pilots.hpp"
#include "scene.hpp"

namespace passim {

// Dataset container: magic "PASSDS", little-endian header (version, N_s, N, T,
// creation seed, config text blob), then fixed-stride records. Record layout,
// in field order: pa_x [N f64], Y_bar [N*2T f64], H_bar [N*2 f64], snr_db f64,
// N f64, T f64, seed (raw 64-bit integer in one 8-byte slot).

inline constexpr char kDatasetMagic[6] = {'P', 'A', 'S', 'S', 'D', 'S'};
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

namespace detail {

inline void put_u32(std::string &buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string &buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string &buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

class Reader {
  public:
    Reader(const char *data, std::size_t size, std::string what)
        : data_(data), size_(size), what_(std::move(what)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s(data_ + pos_, n);
        pos_ += n;
        return s;
    }

    void expect_magic(const char *magic, std::size_t n) {
        need(n);
        if (std::memcmp(data_ + pos_, magic, n) != 0)
            throw IoError(IoError::Code::bad_magic, what_ + ": magic bytes do not match");
        pos_ += n;
    }

    std::size_t remaining() const { return size_ - pos_; }
    bool done() const { return pos_ == size_; }

  private:
    void need(std::size_t n) {
        if (size_ - pos_ < n)
            throw IoError(IoError::Code::truncated, what_ + ": file is truncated");
    }

    const char *data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string what_;
};

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(IoError::Code::open_failed, "cannot open '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError(IoError::Code::truncated, "read failed for '" + path + "'");
    return data;
}

inline void write_file(const std::string &path, const std::string &data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(IoError::Code::open_failed, "cannot open '" + path + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out)
        throw IoError(IoError::Code::write_failed, "write failed for '" + path + "'");
}

} // namespace detail

inline std::size_t dataset_record_doubles(int n, int t) {
    const auto nn = static_cast<std::size_t>(n);
    const auto tt = static_cast<std::size_t>(t);
    return nn + nn * 2 * tt + nn * 2 + 3 + 1; // pa_x, Y_bar, H_bar, (snr, N, T), seed slot
}

inline void serialize_record(std::string &buf, const DatasetRecord &rec) {
    for (double x : rec.pa_x)
        detail::put_f64(buf, x);
    for (double x : rec.Y_bar.data)
        detail::put_f64(buf, x);
    for (double x : rec.H_bar.data)
        detail::put_f64(buf, x);
    detail::put_f64(buf, rec.snr_db);
    detail::put_f64(buf, static_cast<double>(rec.N));
    detail::put_f64(buf, static_cast<double>(rec.T));
    detail::put_u64(buf, rec.seed);
}

inline std::string serialize_dataset(const Dataset &ds) {
    std::string buf;
    buf.reserve(64 + ds.records.size() * dataset_record_doubles(ds.meta.cfg.N, ds.meta.cfg.T) * 8);
    buf.append(kDatasetMagic, sizeof(kDatasetMagic));
    detail::put_u32(buf, kDatasetFormatVersion);
    detail::put_u64(buf, ds.meta.N_s);
    detail::put_u32(buf, static_cast<std::uint32_t>(ds.meta.cfg.N));
    detail::put_u32(buf, static_cast<std::uint32_t>(ds.meta.cfg.T));
    detail::put_u64(buf, ds.meta.creation_seed);
    const std::string cfg_text = serialize_system_config(ds.meta.cfg);
    detail::put_u32(buf, static_cast<std::uint32_t>(cfg_text.size()));
    buf.append(cfg_text);
    for (const auto &rec : ds.records)
        serialize_record(buf, rec);
    return buf;
}

inline void save_dataset(const Dataset &ds, const std::string &path) {
    detail::write_file(path, serialize_dataset(ds));
}

inline Dataset parse_dataset(const std::string &bytes, const std::string &what = "dataset") {
    detail::Reader r(bytes.data(), bytes.size(), what);
    r.expect_magic(kDatasetMagic, sizeof(kDatasetMagic));
    const std::uint32_t version = r.u32();
    if (version != kDatasetFormatVersion)
        throw IoError(IoError::Code::version_mismatch,
                      what + ": format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kDatasetFormatVersion) + ")");
    Dataset ds;
    ds.meta.format_version = version;
    ds.meta.N_s = r.u64();
    const auto n = static_cast<int>(r.u32());
    const auto t = static_cast<int>(r.u32());
    ds.meta.creation_seed = r.u64();
    const std::uint32_t cfg_len = r.u32();
    ds.meta.cfg = parse_system_config(r.bytes(cfg_len));
    if (ds.meta.cfg.N != n || ds.meta.cfg.T != t)
        throw IoError(IoError::Code::malformed, what + ": header N/T disagree with embedded config");

    ds.records.reserve(ds.meta.N_s);
    const auto nn = static_cast<std::size_t>(n);
    const auto tt = static_cast<std::size_t>(t);
    for (std::uint64_t i = 0; i < ds.meta.N_s; ++i) {
        DatasetRecord rec;
        rec.pa_x.resize(nn);
        for (auto &x : rec.pa_x)
            x = r.f64();
        rec.Y_bar = RealMatrix(nn, 2 * tt);
        for (auto &x : rec.Y_bar.data)
            x = r.f64();
        rec.H_bar = RealMatrix(nn, 2);
        for (auto &x : rec.H_bar.data)
            x = r.f64();
        rec.snr_db = r.f64();
        rec.N = static_cast<int>(r.f64());
        rec.T = static_cast<int>(r.f64());
        rec.seed = r.u64();
        ds.records.push_back(std::move(rec));
    }
    if (!r.done())
        throw IoError(IoError::Code::malformed, what + ": trailing bytes after the last record");
    return ds;
}

inline Dataset load_dataset(const std::string &path) {
    return parse_dataset(detail::read_file(path), path);
}

} // namespace passim

#endif // PASSIM_DATASET_IO_HPP
