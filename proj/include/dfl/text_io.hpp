// Copyright 2026 The DFL Authors.
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

#ifndef DFL_TEXT_IO_HPP_
#define DFL_TEXT_IO_HPP_

#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "dfl/errors.hpp"

namespace dfl::detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Reads whitespace-separated records line by line, skipping blank lines and
/// tracking the line number for error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::size_t line() const { return line_no_; }

  /// Next non-blank line split into tokens; throws at end of input.
  std::vector<std::string> tokens() {
    std::string text;
    while (std::getline(is_, text)) {
      ++line_no_;
      if (!text.empty() && text.back() == '\r') text.pop_back();
      std::istringstream ls(text);
      std::vector<std::string> out;
      std::string tok;
      while (ls >> tok) out.push_back(tok);
      if (!out.empty()) return out;
    }
    throw ParseError("unexpected end of file", line_no_ + 1);
  }

  std::vector<double> numbers(std::size_t expect) {
    const auto toks = tokens();
    if (toks.size() != expect) {
      throw ParseError("expected " + std::to_string(expect) + " values, found " + std::to_string(toks.size()),
                       line_no_);
    }
    std::vector<double> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(to_double(t));
    return out;
  }

  double to_double(const std::string& t) const {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      throw ParseError("non-numeric token '" + t + "'", line_no_);
    }
    if (used != t.size()) throw ParseError("non-numeric token '" + t + "'", line_no_);
    return v;
  }

  long to_count(const std::string& t) const {
    const double v = to_double(t);
    if (v < 0 || v != static_cast<double>(static_cast<long>(v))) {
      throw ParseError("expected a nonnegative integer, found '" + t + "'", line_no_);
    }
    return static_cast<long>(v);
  }

 private:
  std::istream& is_;
  std::size_t line_no_ = 0;
};

}  // namespace dfl::detail

#endif  // DFL_TEXT_IO_HPP_
