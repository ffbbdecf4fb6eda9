// Copyright 2026 The histaug Authors. All Rights Reserved.
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

#include "histaug/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "histaug/error.hpp"
#include "histaug/png_io.hpp"

namespace histaug {
namespace fs = std::filesystem;

namespace {
constexpr const char* kManifestHeader = "file,source_id,grid_x,grid_y,label,tumor_pixel_ratio,tissue_fraction,domain_id";
}

std::string format_double(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_manifest(const fs::path& path, const std::vector<TileRecord>& records) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& r : records)
    out << r.file << ',' << r.source_id << ',' << r.grid_x << ',' << r.grid_y << ',' << to_string(r.label) << ','
        << format_double(r.tumor_pixel_ratio) << ',' << format_double(r.tissue_fraction) << ',' << r.domain_id << '\n';
}

std::vector<TileRecord> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot read manifest " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kManifestHeader, ErrorKind::Dataset, "unexpected manifest header in " + path.string());
  std::vector<TileRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    require(f.size() == 8, ErrorKind::Dataset, path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
    TileRecord r;
    try {
      r.file = f[0];
      r.source_id = f[1];
      r.grid_x = std::stoi(f[2]);
      r.grid_y = std::stoi(f[3]);
      r.label = tissue_class_from_string(f[4]);
      r.tumor_pixel_ratio = std::stod(f[5]);
      r.tissue_fraction = std::stod(f[6]);
      r.domain_id = std::stoi(f[7]);
    } catch (const std::invalid_argument&) {
      fail(ErrorKind::Dataset, path.string() + ":" + std::to_string(lineno) + ": malformed field");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<std::vector<int>> Dataset::indices_by_domain() const {
  std::vector<std::vector<int>> out(domain_names.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const int d = tiles[i].domain_id;
    require(d >= 0 && d < domain_count(), ErrorKind::Dataset, "tile domain id outside the domain list");
    out[d].push_back(static_cast<int>(i));
  }
  return out;
}

int Dataset::domain_index(const std::string& name) const {
  const auto it = std::find(domain_names.begin(), domain_names.end(), name);
  if (it != domain_names.end()) return static_cast<int>(it - domain_names.begin());
  try {
    std::size_t used = 0;
    const int idx = std::stoi(name, &used);
    if (used == name.size() && idx >= 0 && idx < domain_count()) return idx;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Dataset, "unknown domain '" + name + "'");
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.domain_names = domain_names;
  for (int i : indices) {
    out.tiles.push_back(tiles.at(i));
    out.records.push_back(records.at(i));
  }
  return out;
}

std::vector<std::string> read_domain_names(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot read " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

void write_domain_names(const fs::path& path, const std::vector<std::string>& names) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  for (const auto& n : names) out << n << '\n';
}

void save_dataset(const fs::path& dir, const Dataset& dataset) {
  fs::create_directories(dir / "tiles");
  std::vector<TileRecord> records = dataset.records;
  for (std::size_t i = 0; i < dataset.tiles.size(); ++i) {
    if (records[i].file.empty()) records[i].file = "tiles/" + records[i].source_id + ".png";
    write_png(dir / records[i].file, dataset.tiles[i].pixels);
  }
  write_manifest(dir / "manifest.csv", records);
  write_domain_names(dir / "domains.txt", dataset.domain_names);
}

Dataset load_dataset(const fs::path& dir) { return load_dataset(dir, dir / "manifest.csv"); }

Dataset load_dataset(const fs::path& base_dir, const fs::path& manifest) {
  Dataset ds;
  ds.records = read_manifest(manifest);
  int max_domain = -1;
  for (const auto& r : ds.records) max_domain = std::max(max_domain, r.domain_id);
  const fs::path beside = manifest.parent_path() / "domains.txt";
  if (fs::exists(beside)) {
    ds.domain_names = read_domain_names(beside);
  } else if (fs::exists(base_dir / "domains.txt")) {
    ds.domain_names = read_domain_names(base_dir / "domains.txt");
  } else {
    for (int d = 0; d <= max_domain; ++d) ds.domain_names.push_back("domain" + std::to_string(d));
  }
  require(max_domain < ds.domain_count(), ErrorKind::Dataset, "manifest references an unlisted domain");
  for (const auto& r : ds.records) {
    ImageTile t;
    t.pixels = read_png(base_dir / r.file);
    t.domain_id = r.domain_id;
    t.label = r.label;
    ds.tiles.push_back(std::move(t));
  }
  return ds;
}

}  // namespace histaug
