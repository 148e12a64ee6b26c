// Copyright 2026 The vgskws Authors
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

#include "vgskws/textgrid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <variant>

#include "vgskws/error.hpp"

namespace vgskws {

namespace {

using Kind = TextGridError::Kind;

// The long encoding is the short one decorated with "key =" labels and
// "item [n]:" headers.  Stripping labels leaves the same value stream.
struct Token {
  enum Type { kNumber, kString, kFlag } type;
  double number = 0.0;
  std::string text;
};

class Tokenizer {
 public:
  Tokenizer(std::string_view text, std::string source) : s_(text), source_(std::move(source)) {
    if (s_.size() >= 3 && static_cast<unsigned char>(s_[0]) == 0xEF &&
        static_cast<unsigned char>(s_[1]) == 0xBB && static_cast<unsigned char>(s_[2]) == 0xBF)
      pos_ = 3;
    if (s_.size() >= 2 && ((static_cast<unsigned char>(s_[0]) == 0xFF && static_cast<unsigned char>(s_[1]) == 0xFE) ||
                           (static_cast<unsigned char>(s_[0]) == 0xFE && static_cast<unsigned char>(s_[1]) == 0xFF)))
      throw TextGridError(Kind::kHeader, source_ + ": UTF-16 TextGrids are not supported; convert to UTF-8");
  }

  bool next(Token& tok) {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '=' || c == ':') {
        ++pos_;
      } else if (c == '!') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (c == '[') {
        while (pos_ < s_.size() && s_[pos_] != ']') ++pos_;
        ++pos_;
      } else if (c == '"') {
        tok = {Token::kString, 0.0, read_string()};
        return true;
      } else if (c == '<') {
        const std::size_t end = s_.find('>', pos_);
        if (end == std::string_view::npos) throw truncated();
        tok = {Token::kFlag, 0.0, std::string(s_.substr(pos_ + 1, end - pos_ - 1))};
        pos_ = end + 1;
        return true;
      } else if ((c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.') {
        tok = {Token::kNumber, read_number(), {}};
        return true;
      } else {
        // Label identifier ("xmin", "intervals", "tiers?", ...).
        while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '=' &&
               s_[pos_] != '[' && s_[pos_] != '"')
          ++pos_;
      }
    }
    return false;
  }

  TextGridError truncated() const {
    return TextGridError(Kind::kTruncated, source_ + ": unexpected end of TextGrid");
  }

 private:
  std::string read_string() {
    std::string out;
    ++pos_;
    while (true) {
      if (pos_ >= s_.size()) throw truncated();
      if (s_[pos_] == '"') {
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '"') {
          out += '"';
          pos_ += 2;
          continue;
        }
        ++pos_;
        return out;
      }
      out += s_[pos_++];
    }
  }

  double read_number() {
    std::size_t end = pos_;
    while (end < s_.size() && !std::isspace(static_cast<unsigned char>(s_[end]))) ++end;
    std::string_view text = s_.substr(pos_, end - pos_);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw TextGridError(Kind::kHeader, source_ + ": bad number '" + std::string(text) + "'");
    pos_ = end;
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::string source_;
};

class Reader {
 public:
  Reader(std::string_view text, std::string source) : tok_(text, source), source_(std::move(source)) {}

  Token any() {
    Token t;
    if (!tok_.next(t)) throw tok_.truncated();
    return t;
  }
  double number() {
    Token t = any();
    if (t.type != Token::kNumber)
      throw TextGridError(Kind::kHeader, source_ + ": expected a number, got '" + t.text + "'");
    return t.number;
  }
  std::string string() {
    Token t = any();
    if (t.type != Token::kString) throw TextGridError(Kind::kHeader, source_ + ": expected a string");
    return t.text;
  }
  const std::string& source() const { return source_; }

 private:
  Tokenizer tok_;
  std::string source_;
};

}  // namespace

AlignmentSet parse_textgrid_text(std::string_view text, const std::string& tier_name,
                                 const std::string& source) {
  Reader r(text, source);
  try {
    if (r.string() != "ooTextFile") throw TextGridError(Kind::kHeader, source + ": not an ooTextFile");
    if (r.string() != "TextGrid") throw TextGridError(Kind::kHeader, source + ": object class is not TextGrid");
  } catch (const TextGridError& e) {
    if (e.kind() == Kind::kHeader) throw;
    throw TextGridError(Kind::kHeader, source + ": unparseable header");
  }
  r.number();  // xmin
  r.number();  // xmax
  Token flag = r.any();
  if (flag.type != Token::kFlag) throw TextGridError(Kind::kHeader, source + ": missing <exists> flag");
  if (flag.text != "exists") throw TextGridError(Kind::kMissingTier, source + ": TextGrid has no tiers");
  const double n_tiers = r.number();

  for (int tier = 0; tier < static_cast<int>(n_tiers); ++tier) {
    const std::string cls = r.string();
    const std::string name = r.string();
    r.number();
    r.number();
    const int count = static_cast<int>(r.number());
    if (cls == "IntervalTier") {
      AlignmentSet out;
      for (int i = 0; i < count; ++i) {
        const double xmin = r.number();
        const double xmax = r.number();
        std::string label = r.string();
        if (name != tier_name) continue;
        if (!(xmin < xmax)) {
          throw TextGridError(Kind::kBadInterval, source + ": tier '" + name + "' interval " +
                                                      std::to_string(i + 1) + " has xmin >= xmax");
        }
        const auto first = label.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        label = label.substr(first, label.find_last_not_of(" \t") - first + 1);
        out.entries.push_back({label, xmin, xmax});
      }
      if (name == tier_name) {
        std::stable_sort(out.entries.begin(), out.entries.end(),
                         [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
        return out;
      }
    } else if (cls == "TextTier") {
      if (name == tier_name)
        throw TextGridError(Kind::kPointTier, source + ": tier '" + name + "' is a point tier");
      for (int i = 0; i < count; ++i) {
        r.number();
        r.string();
      }
    } else {
      throw TextGridError(Kind::kHeader, source + ": unknown tier class '" + cls + "'");
    }
  }
  throw TextGridError(Kind::kMissingTier, source + ": no interval tier named '" + tier_name + "'");
}

AlignmentSet parse_textgrid(const std::filesystem::path& path, const std::string& tier_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("textgrid", "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_textgrid_text(text, tier_name, path.string());
}

}  // namespace vgskws
