// Copyright 2026 The xsynth Authors
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

#ifndef XSYNTH_PIPELINE_MANIFEST_HPP
#define XSYNTH_PIPELINE_MANIFEST_HPP

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"
#include "xsynth/pipeline/config.hpp"

namespace xsynth::pipeline {

enum class Split { Train, Eval };

struct ManifestEntry {
  std::string subject_id;
  std::string condition;
  Split split = Split::Train;
  fs::path visible;
  fs::path s0;
  std::optional<fs::path> s1;
  std::optional<fs::path> s2;
  std::optional<fs::path> landmarks;

  std::string stem() const { return subject_id + "_" + condition; }
  bool polarimetric() const { return s1.has_value() && s2.has_value(); }
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
      if (e.split == s) out.push_back(&e);
    return out;
  }
};

inline constexpr const char* kManifestHeader = "subject_id,condition,split,visible,s0,s1,s2,landmarks";

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

inline bool valid_token(const std::string& s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) return false;
  return true;
}

}  // namespace detail

/// Parses the manifest CSV. Relative paths resolve against `base_dir`.
/// With `check_files`, every referenced path must exist.
inline Manifest parse_manifest(const std::string& text, const fs::path& base_dir, bool check_files = true) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kManifestHeader)
    fail(ErrorCode::DataError, std::string("manifest header must be '") + kManifestHeader + "'");

  Manifest m;
  std::set<std::string> seen;
  std::map<std::string, Split> subject_split;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto where = "manifest line " + std::to_string(lineno) + ": ";
    const auto f = detail::split_csv_line(line);
    if (f.size() != 8) fail(ErrorCode::DataError, where + "expected 8 fields, got " + std::to_string(f.size()));

    ManifestEntry e;
    e.subject_id = f[0];
    e.condition = f[1];
    if (!detail::valid_token(e.subject_id) || !detail::valid_token(e.condition))
      fail(ErrorCode::DataError, where + "subject_id and condition must be non-empty [A-Za-z0-9._-]");
    if (f[2] == "train") e.split = Split::Train;
    else if (f[2] == "eval") e.split = Split::Eval;
    else fail(ErrorCode::DataError, where + "split must be 'train' or 'eval'");

    auto path_of = [&](const std::string& s) -> std::optional<fs::path> {
      if (s.empty()) return std::nullopt;
      fs::path p = base_dir / s;
      if (check_files && !fs::exists(p)) fail(ErrorCode::DataError, where + "file not found: " + p.string());
      return p;
    };
    auto visible = path_of(f[3]);
    auto s0 = path_of(f[4]);
    if (!visible || !s0) fail(ErrorCode::DataError, where + "visible and s0 paths are required");
    e.visible = *visible;
    e.s0 = *s0;
    e.s1 = path_of(f[5]);
    e.s2 = path_of(f[6]);
    e.landmarks = path_of(f[7]);

    if (!seen.insert(e.stem()).second) fail(ErrorCode::DataError, where + "duplicate entry " + e.stem());
    auto [it, inserted] = subject_split.emplace(e.subject_id, e.split);
    if (!inserted && it->second != e.split)
      fail(ErrorCode::DataError, where + "subject '" + e.subject_id + "' appears in both train and eval splits");
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) fail(ErrorCode::DataError, "manifest has no entries");
  return m;
}

inline Manifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::DataError, "manifest not found: " + path.string());
  return parse_manifest(read_file_text(path), path.parent_path());
}

/// Polarimetric mode needs S1 and S2 on every entry that will be used.
inline void check_mode(const Manifest& m, Mode mode) {
  if (mode != Mode::Polarimetric) return;
  for (const auto& e : m.entries)
    if (!e.polarimetric())
      fail(ErrorCode::DataError, "entry " + e.stem() + " lacks S1/S2 paths required in polarimetric mode");
}

inline std::string format_manifest_row(const ManifestEntry& e, const fs::path& base_dir) {
  auto rel = [&](const std::optional<fs::path>& p) {
    return p ? fs::relative(*p, base_dir).generic_string() : std::string();
  };
  return e.subject_id + "," + e.condition + "," + (e.split == Split::Train ? "train" : "eval") + "," +
         rel(e.visible) + "," + rel(e.s0) + "," + rel(e.s1) + "," + rel(e.s2) + "," + rel(e.landmarks);
}

}  // namespace xsynth::pipeline

#endif  // XSYNTH_PIPELINE_MANIFEST_HPP
