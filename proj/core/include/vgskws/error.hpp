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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vgskws {

/// Base class of every error raised by the library.  `stage()` names the
/// pipeline stage that raised it so the CLI can tag diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Malformed input file.  `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error("parse",
              file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        file_(file),
        line_(line) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("corpus", "duplicate utterance id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class MissingAlignmentError : public Error {
 public:
  explicit MissingAlignmentError(const std::string& id, const std::string& detail = {})
      : Error("corpus", "utterance '" + id + "' has no alignment" +
                            (detail.empty() ? std::string() : ": " + detail)),
        id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class VocabularyError : public Error {
 public:
  explicit VocabularyError(const std::string& what) : Error("vocabulary", what) {}
};

class TextGridError : public Error {
 public:
  enum class Kind { kHeader, kMissingTier, kBadInterval, kTruncated, kPointTier };
  TextGridError(Kind kind, const std::string& what) : Error("textgrid", what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Value outside its documented domain (probabilities, configuration).
class RangeError : public Error {
 public:
  RangeError(std::string stage, const std::string& what) : Error(std::move(stage), what) {}
};

class ShapeError : public Error {
 public:
  ShapeError(std::string stage, const std::string& what) : Error(std::move(stage), what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class IoError : public Error {
 public:
  IoError(std::string stage, const std::string& what) : Error(std::move(stage), what) {}
};

}  // namespace vgskws
