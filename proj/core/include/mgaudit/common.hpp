#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mgaudit {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown rule ids, unmapped labels, bad options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input data violates its declared schema or a domain invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Bad command line usage (unknown stage, unknown report format).
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Calls `fn(line_number, line)` for each line (1-based, trailing '\r' and a
/// leading UTF-8 BOM removed). Throws IoError when the file cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

/// One-item-per-line list files (given names, stoplists). Blank lines and
/// lines starting with '#' are skipped.
std::vector<std::string> read_line_list(const std::filesystem::path& path);

}  // namespace mgaudit
