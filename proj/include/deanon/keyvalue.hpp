// Copyright 2026 The Deanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef DEANON_KEYVALUE_HPP
#define DEANON_KEYVALUE_HPP

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "deanon/common.hpp"

namespace deanon {

// Plain-text "key = value" configuration. '#' starts a comment; a value may
// be a comma-separated list (grid syntax "m_total = 2,4,6,8"). Every key must
// be consumed, so typos surface as errors via check_all_used().
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      const std::string_view text = trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
      const std::string key(trim(text.substr(0, eq)));
      const std::string value(trim(text.substr(eq + 1)));
      if (key.empty()) throw ParseError(line_no, "empty key");
      if (!cfg.entries_.emplace(key, Entry{value, line_no}).second) {
        throw ParseError(line_no, "duplicate key '" + key + "'");
      }
    }
    if (in.bad()) throw IoError("read error");
    return cfg;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    entries_[key] = Entry{value, 0};
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    return convert<T>(it->second.value, it->second.line, key);
  }

  template <class T>
  std::vector<T> get_list(const std::string& key, std::vector<T> fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    std::vector<T> out;
    std::string_view rest = it->second.value;
    for (;;) {
      const auto comma = rest.find(',');
      out.push_back(convert<T>(trim(rest.substr(0, comma)), it->second.line, key));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

  void check_all_used() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) throw ParseError(entry.line, "unknown key '" + key + "'");
    }
  }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  }

  template <class T>
  static T convert(std::string_view text, std::size_t line, const std::string& key) {
    auto fail = [&]() -> ParseError {
      return ParseError(line, "bad value '" + std::string(text) + "' for '" + key + "'");
    };
    if constexpr (std::is_same_v<T, std::string>) {
      return std::string(text);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw fail();
    } else {
      T v{};
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) throw fail();
      return v;
    }
  }

  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace deanon

#endif  // DEANON_KEYVALUE_HPP
