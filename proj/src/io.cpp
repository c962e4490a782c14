/*
 Copyright 2026 The NODA Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "noda/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "noda/errors.hpp"

namespace noda {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");
static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

constexpr char kCheckpointMagic[] = "NODACKPT";
constexpr char kDatasetMagic[] = "NODADATA";

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_bytes(const std::string& s) { out_.append(s); }
  void put_doubles(std::span<const double> v) {
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_doubles(std::span<double> out, const char* what) {
    need(out.size() * sizeof(double), what);
    std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n)
      throw FormatError(pos_, std::string("truncated while reading ") + what + " (need " +
                                  std::to_string(n) + " bytes, have " + std::to_string(remaining()) + ")");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void check_magic(Reader& in, const char* magic) {
  const std::string got = in.get_bytes(8, "magic");
  if (got != std::string(magic, 8)) throw FormatError(0, std::string("bad magic, expected ") + magic);
}

std::string encode_metadata(const Metadata& meta) {
  std::string text;
  for (const auto& [key, value] : meta) {
    if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
      fail(ErrorKind::format, "metadata entry '" + key + "' cannot be encoded");
    text += key + "=" + value + "\n";
  }
  return text;
}

Metadata decode_metadata(const std::string& text, std::size_t offset) {
  Metadata meta;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) throw FormatError(offset + start, "unterminated metadata line");
    const std::string line = text.substr(start, end - start);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(offset + start, "metadata line without '='");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
    start = end + 1;
  }
  return meta;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  Writer out;
  out.put_bytes(std::string(kCheckpointMagic, 8));
  out.put<std::uint32_t>(kCheckpointVersion);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(checkpoint.params.size()));
  for (const auto& [name, tensor] : checkpoint.params) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max())
      fail(ErrorKind::format, "parameter name too long");
    out.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    out.put_bytes(name);
    out.put<std::uint8_t>(static_cast<std::uint8_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) out.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    out.put_doubles(tensor.data());
  }
  const std::string meta = encode_metadata(checkpoint.metadata);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  out.put_bytes(meta);
  return out.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  check_magic(in, kCheckpointMagic);
  const std::size_t version_at = in.offset();
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError(version_at, "unsupported checkpoint version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>("entry count");
  Checkpoint out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get<std::uint16_t>("name length");
    const std::size_t name_at = in.offset();
    std::string name = in.get_bytes(name_len, "name");
    const auto rank = in.get<std::uint8_t>("rank");
    Shape shape;
    std::size_t elements = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      const std::size_t dim_at = in.offset();
      const auto dim = in.get<std::uint32_t>("dimension");
      if (dim == 0) throw FormatError(dim_at, "zero dimension in '" + name + "'");
      shape.push_back(dim);
      elements *= dim;
    }
    if (elements > in.remaining() / sizeof(double))
      throw FormatError(in.offset(), "truncated payload of '" + name + "'");
    std::vector<double> data(elements);
    in.get_doubles(data, "payload");
    if (!out.params.emplace(name, Tensor(std::move(shape), std::move(data))).second)
      throw FormatError(name_at, "duplicate parameter '" + name + "'");
  }
  const auto meta_len = in.get<std::uint32_t>("metadata length");
  const std::size_t meta_at = in.offset();
  out.metadata = decode_metadata(in.get_bytes(meta_len, "metadata"), meta_at);
  if (in.remaining() != 0) throw FormatError(in.offset(), "trailing bytes after metadata");
  return out;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(e.offset(), path + ": " + e.what());
  }
}

std::string encode_dataset(const std::vector<Transition>& records) {
  const std::size_t s_dim = records.empty() ? 0 : records.front().s.size();
  const std::size_t a_dim = records.empty() ? 0 : records.front().a.size();
  Writer out;
  out.put_bytes(std::string(kDatasetMagic, 8));
  out.put<std::uint32_t>(kDatasetVersion);
  out.put<std::uint64_t>(records.size());
  out.put<std::uint32_t>(static_cast<std::uint32_t>(s_dim));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(a_dim));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Transition& t = records[i];
    if (t.s.size() != s_dim || t.s2.size() != s_dim || t.a.size() != a_dim)
      fail(ErrorKind::dimension, "dataset record " + std::to_string(i) + " has inconsistent dimensions");
    out.put_doubles(t.s);
    out.put_doubles(t.a);
    out.put_doubles(t.s2);
    out.put<double>(t.r);
    out.put<std::uint8_t>(t.done ? 1 : 0);
  }
  return out.take();
}

std::vector<Transition> decode_dataset(const std::string& bytes) {
  Reader in(bytes);
  check_magic(in, kDatasetMagic);
  const std::size_t version_at = in.offset();
  const auto version = in.get<std::uint32_t>("version");
  if (version != kDatasetVersion)
    throw FormatError(version_at, "unsupported dataset version " + std::to_string(version));
  const auto count = in.get<std::uint64_t>("record count");
  const auto s_dim = in.get<std::uint32_t>("state dimension");
  const auto a_dim = in.get<std::uint32_t>("action dimension");
  const std::size_t record_bytes = (2 * s_dim + a_dim + 1) * sizeof(double) + 1;
  if (count > in.remaining() / record_bytes)
    throw FormatError(in.offset(), "file holds fewer than the declared " + std::to_string(count) + " records");
  std::vector<Transition> out(count);
  for (auto& t : out) {
    t.s.resize(s_dim);
    t.a.resize(a_dim);
    t.s2.resize(s_dim);
    in.get_doubles(t.s, "state");
    in.get_doubles(t.a, "action");
    in.get_doubles(t.s2, "next state");
    t.r = in.get<double>("reward");
    const std::size_t done_at = in.offset();
    const auto done = in.get<std::uint8_t>("done flag");
    if (done > 1) throw FormatError(done_at, "done flag must be 0 or 1");
    t.done = done == 1;
  }
  if (in.remaining() != 0) throw FormatError(in.offset(), "trailing bytes after the last record");
  return out;
}

void save_dataset(const std::string& path, const std::vector<Transition>& records) {
  write_file(path, encode_dataset(records));
}

std::vector<Transition> load_dataset(const std::string& path) {
  try {
    return decode_dataset(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(e.offset(), path + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "error while reading '" + path + "'");
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) fail(ErrorKind::io, "error while writing '" + path + "'");
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    return s + '\n';
  };
  std::string text = line(header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != header.size())
      fail(ErrorKind::contract, path + ": row " + std::to_string(i) + " has " +
                                    std::to_string(rows[i].size()) + " cells, header has " +
                                    std::to_string(header.size()));
    text += line(rows[i]);
  }
  write_file(path, text);
}

}  // namespace noda
