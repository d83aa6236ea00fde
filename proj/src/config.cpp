#include "trinorm/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "trinorm/rng.hpp"

namespace trinorm {
namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    const std::size_t a = item.find_first_not_of(" \t");
    const std::size_t b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const std::string& item : split_list(s)) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw DataError("cannot parse number '" + item + "'");
    }
  }
  return out;
}

double parse_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw DataError("cannot parse number '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s) {
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw DataError("cannot parse integer '" + s + "'");
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i];
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    out += buf;
  }
  return out;
}

}  // namespace

RunConfig make_profile(const std::string& name, std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  if (name == "toy") {
    cfg.profile = "toy";
    cfg.train_shape_kinds = {"cube", "tetrahedron", "sphere", "plane"};
    cfg.val_shape_kinds = {"cube"};
    cfg.points_per_shape = 40000;
    cfg.noise_levels = {0.0, 0.005, 0.01};
    cfg.patches_per_shape = 500;
    cfg.val_patches_per_shape = 200;
    cfg.patch.k = 64;
    cfg.patch.r_fraction = 0.03;  // desk-scale sweet spot, see the size sweep
    cfg.train.encoder_epochs = 5;
    cfg.train.estimator_epochs = 15;
  } else if (name == "paper") {
    cfg.profile = "paper";
    cfg.train_shape_kinds = {"cube", "tetrahedron", "cylinder", "sphere", "plane"};
    cfg.val_shape_kinds = {"cube"};
    cfg.points_per_shape = 100000;
    cfg.noise_levels = {0.0, 0.0025, 0.005, 0.01, 0.015, 0.025};
    cfg.patches_per_shape = 8000;
    cfg.val_patches_per_shape = 1000;
    cfg.patch.k = 500;
    cfg.patch.r_fraction = 0.05;
    cfg.train.encoder_epochs = 5;
    cfg.train.estimator_epochs = 50;
  } else {
    throw DataError("unknown profile '" + name + "' (expected toy or paper)");
  }
  cfg.train.seed = seed;
  cfg.patch.seed = seed;
  cfg.triplet.seed = seed;
  return cfg;
}

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "shapes") cfg.train_shape_kinds = split_list(value);
  else if (key == "val_shapes") cfg.val_shape_kinds = split_list(value);
  else if (key == "points_per_shape") cfg.points_per_shape = parse_u64(value);
  else if (key == "noise_levels") cfg.noise_levels = parse_doubles(value);
  else if (key == "patches_per_shape") cfg.patches_per_shape = parse_u64(value);
  else if (key == "val_patches_per_shape") cfg.val_patches_per_shape = parse_u64(value);
  else if (key == "patch_k") cfg.patch.k = parse_u64(value);
  else if (key == "patch_r_fraction") cfg.patch.r_fraction = parse_double(value);
  else if (key == "theta_th_deg") cfg.triplet.theta_th_deg = parse_double(value);
  else if (key == "search_growth") cfg.triplet.search_growth = parse_double(value);
  else if (key == "max_search_factor") cfg.triplet.max_search_factor = parse_double(value);
  else if (key == "encoder_epochs") cfg.train.encoder_epochs = parse_u64(value);
  else if (key == "estimator_epochs") cfg.train.estimator_epochs = parse_u64(value);
  else if (key == "batch_size") cfg.train.batch_size = parse_u64(value);
  else if (key == "learning_rate") cfg.train.learning_rate = parse_double(value);
  else if (key == "momentum") cfg.train.momentum = parse_double(value);
  else if (key == "plateau_factor") cfg.train.plateau_factor = parse_double(value);
  else if (key == "plateau_patience") cfg.train.plateau_patience = static_cast<int>(parse_u64(value));
  else if (key == "sigma_s_deg") cfg.train.sigma_s_deg = parse_double(value);
  else if (key == "loss_exponent") cfg.train.loss_exponent = static_cast<int>(parse_u64(value));
  else if (key == "margin") cfg.train.margin = parse_double(value);
  else if (key == "pca_k") cfg.pca_k = parse_u64(value);
  else if (key == "seed") {
    cfg.seed = parse_u64(value);
    cfg.train.seed = cfg.seed;
    cfg.patch.seed = cfg.seed;
    cfg.triplet.seed = cfg.seed;
  } else {
    throw DataError("unknown config key '" + key + "'");
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    auto trim = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const std::size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw DataError(path + ":" + std::to_string(line_no) + ": empty key");
    try {
      apply_config_line(cfg, key, value);
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "profile = " << cfg.profile << '\n';
  out << "shapes = " << join(cfg.train_shape_kinds) << '\n';
  out << "val_shapes = " << join(cfg.val_shape_kinds) << '\n';
  out << "points_per_shape = " << cfg.points_per_shape << '\n';
  out << "noise_levels = " << join(cfg.noise_levels) << '\n';
  out << "patches_per_shape = " << cfg.patches_per_shape << '\n';
  out << "val_patches_per_shape = " << cfg.val_patches_per_shape << '\n';
  out << "patch_k = " << cfg.patch.k << '\n';
  out << "patch_r_fraction = " << num(cfg.patch.r_fraction) << '\n';
  out << "theta_th_deg = " << num(cfg.triplet.theta_th_deg) << '\n';
  out << "search_growth = " << num(cfg.triplet.search_growth) << '\n';
  out << "max_search_factor = " << num(cfg.triplet.max_search_factor) << '\n';
  out << "encoder_epochs = " << cfg.train.encoder_epochs << '\n';
  out << "estimator_epochs = " << cfg.train.estimator_epochs << '\n';
  out << "batch_size = " << cfg.train.batch_size << '\n';
  out << "learning_rate = " << num(cfg.train.learning_rate) << '\n';
  out << "momentum = " << num(cfg.train.momentum) << '\n';
  out << "plateau_factor = " << num(cfg.train.plateau_factor) << '\n';
  out << "plateau_patience = " << cfg.train.plateau_patience << '\n';
  out << "sigma_s_deg = " << num(cfg.train.sigma_s_deg) << '\n';
  out << "loss_exponent = " << cfg.train.loss_exponent << '\n';
  out << "margin = " << num(cfg.train.margin) << '\n';
  out << "pca_k = " << cfg.pca_k << '\n';
  out << "seed = " << cfg.seed << '\n';
  return out.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  return h;
}

DatasetSpec dataset_spec(const RunConfig& cfg) {
  DatasetSpec spec;
  spec.noise_levels = cfg.noise_levels;
  spec.patches_per_shape = cfg.patches_per_shape;
  spec.val_patches_per_shape = cfg.val_patches_per_shape;
  spec.patch = cfg.patch;
  spec.triplet = cfg.triplet;
  spec.seed = cfg.seed;
  for (std::size_t i = 0; i < cfg.train_shape_kinds.size(); ++i) {
    ShapeSpec s;
    s.kind = shape_kind_from_string(cfg.train_shape_kinds[i]);
    s.n_points = cfg.points_per_shape;
    s.name = cfg.train_shape_kinds[i] + "-" + std::to_string(i);
    s.seed = hash_str(cfg.seed, s.name.c_str());
    spec.train_shapes.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < cfg.val_shape_kinds.size(); ++i) {
    ShapeSpec s;
    s.kind = shape_kind_from_string(cfg.val_shape_kinds[i]);
    s.n_points = cfg.points_per_shape;
    s.name = cfg.val_shape_kinds[i] + "-val-" + std::to_string(i);
    s.seed = hash_str(cfg.seed, s.name.c_str());
    spec.val_shapes.push_back(std::move(s));
  }
  return spec;
}

}  // namespace trinorm
