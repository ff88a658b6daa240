#include "urlformer/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "urlformer/errors.hpp"
#include "urlformer/rng.hpp"

namespace urlformer {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path);
  return buf.str();
}

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  }
  return s;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_data = false;  // distinguishes "" (one empty field) from a blank line

  auto end_field = [&]() {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&]() {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    if (field == "\r") field.clear();
    end_field();
    if (row_has_data) rows.push_back(std::move(row));
    row.clear();
    row_has_data = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
      row_has_data = true;
    } else if (c == ',') {
      end_field();
      row_has_data = true;
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
      if (c != '\r') row_has_data = true;
    }
  }
  if (row_has_data) end_row();
  return rows;
}

std::vector<LabeledUrl> load_malicious_csv(const std::string& path, std::size_t* skipped) {
  const auto rows = parse_csv(read_file(path));
  if (skipped) *skipped = 0;
  if (rows.empty()) throw FormatError(path + ": no header row");

  std::size_t url_col = rows[0].size();
  for (std::size_t j = 0; j < rows[0].size(); ++j) {
    if (lower(trim(rows[0][j])) == "url") {
      url_col = j;
      break;
    }
  }
  if (url_col == rows[0].size()) throw FormatError(path + ": header has no url column");

  std::vector<LabeledUrl> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::string url = url_col < rows[r].size() ? trim(rows[r][url_col]) : "";
    if (url.empty()) {
      if (skipped) ++*skipped;
      continue;
    }
    out.push_back({url, 1, path});
  }
  return out;
}

std::vector<LabeledUrl> load_benign_list(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<LabeledUrl> out;
  std::string line;
  while (std::getline(is, line)) {
    const std::string url = trim(line);
    if (!url.empty()) out.push_back({url, 0, path});
  }
  return out;
}

namespace {

// Uniform without-replacement pick of `take` records: a partial ascending
// Fisher-Yates over a working copy.
std::vector<LabeledUrl> sample_from(std::vector<LabeledUrl> pool, std::size_t take, Rng& rng) {
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + std::size_t(rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

void fisher_yates_with(std::vector<LabeledUrl>& records, Rng& rng) {
  for (std::size_t i = records.size(); i > 1; --i) {
    const std::size_t j = std::size_t(rng.uniform_index(i));
    std::swap(records[i - 1], records[j]);
  }
}

}  // namespace

std::vector<LabeledUrl> balance_and_sample(const std::vector<LabeledUrl>& benign,
                                           const std::vector<LabeledUrl>& malicious,
                                           std::size_t per_class, std::uint64_t seed) {
  if (benign.size() < per_class) {
    throw DataError("need " + std::to_string(per_class) + " benign records, have " +
                    std::to_string(benign.size()));
  }
  if (malicious.size() < per_class) {
    throw DataError("need " + std::to_string(per_class) + " malicious records, have " +
                    std::to_string(malicious.size()));
  }
  Rng rng(seed);
  std::vector<LabeledUrl> out = sample_from(benign, per_class, rng);
  std::vector<LabeledUrl> mal = sample_from(malicious, per_class, rng);
  out.insert(out.end(), std::make_move_iterator(mal.begin()), std::make_move_iterator(mal.end()));
  fisher_yates_with(out, rng);
  return out;
}

void fisher_yates(std::vector<LabeledUrl>& records, std::uint64_t seed) {
  Rng rng(seed);
  fisher_yates_with(records, rng);
}

DatasetSplit split(std::vector<LabeledUrl> data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ParameterError("train fraction must lie in (0, 1), got " + std::to_string(train_fraction));
  }
  fisher_yates(data, seed);
  const std::size_t cut = std::size_t(std::floor(double(data.size()) * train_fraction));
  DatasetSplit out;
  out.seed = seed;
  out.train.assign(data.begin(), data.begin() + std::ptrdiff_t(cut));
  out.test.assign(data.begin() + std::ptrdiff_t(cut), data.end());
  return out;
}

std::vector<LabeledUrl> dedup_urls(const std::vector<LabeledUrl>& records) {
  std::vector<LabeledUrl> out;
  out.reserve(records.size());
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.url).second) out.push_back(r);
  }
  return out;
}

void save_dataset_tsv(const std::vector<LabeledUrl>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& r : records) out << r.label << '\t' << r.url << '\n';
  if (!out) throw IoError("failed writing " + path);
}

std::vector<LabeledUrl> load_dataset_tsv(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<LabeledUrl> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab != 1 || (line[0] != '0' && line[0] != '1') ||
        tab + 1 >= line.size()) {
      throw FormatError(path + " line " + std::to_string(line_no) + ": expected <label>\\t<url>");
    }
    out.push_back({line.substr(tab + 1), line[0] - '0', path});
  }
  return out;
}

}  // namespace urlformer
