#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace entnet {

/// Flat `key = value` configuration. Lines starting with `#` and blank lines
/// are ignored; later assignments override earlier ones.
class FlatConfig {
 public:
  static FlatConfig parse(std::istream& in);
  static FlatConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  /// Copies every entry of `other` over this one.
  void merge(const FlatConfig& other);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list.
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace entnet
