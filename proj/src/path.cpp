#include "truncvar/path.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "truncvar/common.hpp"

namespace truncvar {

void SampledPath::validate() const {
  if (times.size() != values.size())
    throw std::invalid_argument("path: times/values length mismatch");
  if (times.empty()) throw std::invalid_argument("path: empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
      throw std::invalid_argument("path: non-finite entry");
    if (times[i] < 0.0 || times[i] > 1.0)
      throw std::invalid_argument("path: time outside [0,1]");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("path: times not strictly increasing");
  }
}

std::string path_to_csv(const SampledPath& path) {
  std::string out = "t,x\n";
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    out += format_g17(path.times[i]);
    out += ',';
    out += format_g17(path.values[i]);
    out += '\n';
  }
  return out;
}

SampledPath path_from_csv(const std::string& text) {
  SampledPath path;
  path.meta.generator = "csv";
  std::size_t pos = 0;
  bool first_line = true;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (first_line) {
      first_line = false;
      // Header is optional; skip any line that does not start numerically.
      const char c = line.front();
      if (c != '-' && c != '+' && c != '.' && !(c >= '0' && c <= '9')) continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos)
      throw std::invalid_argument("csv: expected 't,x' row");
    double t = 0.0, x = 0.0;
    auto r1 = std::from_chars(line.data(), line.data() + comma, t);
    auto r2 =
        std::from_chars(line.data() + comma + 1, line.data() + line.size(), x);
    if (r1.ec != std::errc{} || r2.ec != std::errc{})
      throw std::invalid_argument("csv: malformed number");
    path.times.push_back(t);
    path.values.push_back(x);
  }
  path.validate();
  return path;
}

std::string path_to_json(const SampledPath& path) {
  nlohmann::ordered_json meta;
  meta["generator"] = path.meta.generator;
  meta["n_steps"] = path.meta.n_steps;
  meta["seed"] = path.meta.seed;
  if (!std::isnan(path.meta.hurst)) meta["hurst"] = path.meta.hurst;
  if (!std::isnan(path.meta.tail_dof)) meta["tail_dof"] = path.meta.tail_dof;
  if (!path.meta.method.empty()) meta["method"] = path.meta.method;

  nlohmann::ordered_json j;
  j["meta"] = meta;
  j["times"] = path.times;
  j["values"] = path.values;
  return j.dump(2) + "\n";
}

}  // namespace truncvar
