#pragma once

// Little binary framing shared by checkpoints and datasets:
//   magic[8] | u32 version | u64 json length | json | payload... | u64 FNV-1a of everything before

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "meshfree/errors.hpp"

namespace meshfree::nemdo::io {

inline std::uint64_t fnv1a(const char* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  Writer(std::string_view magic, std::uint32_t version, const nlohmann::json& header) {
    require(magic.size() == 8, "magic must be 8 bytes");
    buf_.append(magic);
    put(version);
    const std::string text = header.dump();
    put(static_cast<std::uint64_t>(text.size()));
    buf_.append(text);
  }

  template <class T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  template <class T>
  void put_array(const std::vector<T>& v) {
    put(static_cast<std::uint64_t>(v.size()));
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }

  /// Writes to a temporary sibling then renames, so readers never see a torn file.
  void save(const std::filesystem::path& path) {
    const std::uint64_t sum = fnv1a(buf_.data(), buf_.size());
    std::string out = buf_;
    out.append(reinterpret_cast<const char*>(&sum), sizeof(sum));
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) fail(ErrorCode::IoError, "cannot write " + tmp.string());
      f.write(out.data(), static_cast<std::streamsize>(out.size()));
      if (!f) fail(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::filesystem::path& path, std::string_view magic, std::uint32_t version) : path_(path.string()) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::IoError, "cannot open " + path_);
    buf_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    if (buf_.size() < 8 + 4 + 8 + 8 || buf_.compare(0, 8, magic) != 0)
      fail(ErrorCode::IncompatibleCheckpoint, path_ + " is not a " + std::string(magic) + " file");
    std::uint64_t stored = 0;
    std::memcpy(&stored, buf_.data() + buf_.size() - 8, 8);
    if (stored != fnv1a(buf_.data(), buf_.size() - 8))
      fail(ErrorCode::IncompatibleCheckpoint, path_ + ": checksum mismatch");
    end_ = buf_.size() - 8;
    pos_ = 8;
    const auto v = get<std::uint32_t>();
    if (v != version)
      fail(ErrorCode::IncompatibleCheckpoint, path_ + ": format version " + std::to_string(v) + ", expected " +
                                                  std::to_string(version));
    const auto len = get<std::uint64_t>();
    need(len);
    header_ = nlohmann::json::parse(buf_.substr(pos_, len));
    pos_ += len;
  }

  const nlohmann::json& header() const { return header_; }

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  template <class T>
  std::vector<T> get_array() {
    const auto n = get<std::uint64_t>();
    if (n > (end_ - pos_) / sizeof(T)) fail(ErrorCode::IncompatibleCheckpoint, path_ + ": truncated array");
    std::vector<T> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }

  void expect_end() const {
    if (pos_ != end_) fail(ErrorCode::IncompatibleCheckpoint, path_ + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) fail(ErrorCode::IncompatibleCheckpoint, path_ + ": truncated");
  }

  std::string path_;
  std::string buf_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  nlohmann::json header_;
};

}  // namespace meshfree::nemdo::io
