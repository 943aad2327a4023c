#include "rankae/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rankae {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long to_long(const std::string& v, const std::string& key) {
  char* end = nullptr;
  long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw std::runtime_error("config: bad integer for '" + key + "': " + v);
  return x;
}

double to_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw std::runtime_error("config: bad number for '" + key + "': " + v);
  return x;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::runtime_error("config: bad boolean for '" + key + "': " + v);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Applies one key to a ModelConfig. Returns false for unrecognized keys so
/// callers can try their own key set.
bool apply_model_key(ModelConfig& m, const std::string& key,
                     const std::string& value) {
  if (key == "num_features") m.num_features = int(to_long(value, key));
  else if (key == "num_labels") m.num_labels = int(to_long(value, key));
  else if (key == "embed_dim") m.embed_dim = int(to_long(value, key));
  else if (key == "latent_dim") m.latent_dim = int(to_long(value, key));
  else if (key == "reduction") m.reduction = int(to_long(value, key));
  else if (key == "hidden_dim") m.hidden_dim = int(to_long(value, key));
  else if (key == "lambda") m.lambda = to_double(value, key);
  else if (key == "margin") m.margin = to_double(value, key);
  else if (key == "loss") m.loss = loss_kind_from_name(value);
  else if (key == "epochs") m.epochs = int(to_long(value, key));
  else if (key == "batch_size") m.batch_size = int(to_long(value, key));
  else if (key == "seed") m.seed = std::uint64_t(to_long(value, key));
  else if (key == "lr") m.lr = to_double(value, key);
  else if (key == "beta1") m.beta1 = to_double(value, key);
  else if (key == "beta2") m.beta2 = to_double(value, key);
  else if (key == "adam_eps") m.adam_eps = to_double(value, key);
  else if (key == "weight_decay") m.weight_decay = to_double(value, key);
  else if (key == "no_attention") m.no_attention = to_bool(value, key);
  else if (key == "deterministic") m.deterministic = to_bool(value, key);
  else return false;
  return true;
}

}  // namespace

const char* loss_kind_name(LossKind kind) {
  return kind == LossKind::rank ? "rank" : "bce";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "rank") return LossKind::rank;
  if (name == "bce") return LossKind::bce;
  throw std::runtime_error("unknown loss kind '" + name + "' (rank or bce)");
}

void apply_config_file(std::istream& in, RunConfig& cfg) {
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "num_features" || key == "num_labels")
      throw std::runtime_error("config: '" + key +
                               "' is derived from the data, not configurable");
    if (apply_model_key(cfg.model, key, value)) continue;
    if (key == "train") cfg.train_path = value;
    else if (key == "valid") cfg.valid_path = value;
    else if (key == "test") cfg.test_path = value;
    else if (key == "vocab") cfg.vocab_path = value;
    else if (key == "embeddings") cfg.embeddings_path = value;
    else if (key == "tfidf") cfg.tfidf = to_bool(value, key);
    else if (key == "one_based") cfg.one_based = to_bool(value, key);
    else if (key == "valid_fraction") cfg.valid_fraction = to_double(value, key);
    else if (key == "threads") cfg.threads = int(to_long(value, key));
    else
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
  }
}

void apply_config_file_path(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  apply_config_file(in, cfg);
}

std::string model_config_to_text(const ModelConfig& m) {
  std::ostringstream out;
  out << "num_features=" << m.num_features << '\n';
  out << "num_labels=" << m.num_labels << '\n';
  out << "embed_dim=" << m.embed_dim << '\n';
  out << "latent_dim=" << m.latent_dim << '\n';
  out << "reduction=" << m.reduction << '\n';
  out << "hidden_dim=" << m.hidden_dim << '\n';
  out << "lambda=" << format_double(m.lambda) << '\n';
  out << "margin=" << format_double(m.margin) << '\n';
  out << "loss=" << loss_kind_name(m.loss) << '\n';
  out << "epochs=" << m.epochs << '\n';
  out << "batch_size=" << m.batch_size << '\n';
  out << "seed=" << m.seed << '\n';
  out << "lr=" << format_double(m.lr) << '\n';
  out << "beta1=" << format_double(m.beta1) << '\n';
  out << "beta2=" << format_double(m.beta2) << '\n';
  out << "adam_eps=" << format_double(m.adam_eps) << '\n';
  out << "weight_decay=" << format_double(m.weight_decay) << '\n';
  out << "no_attention=" << (m.no_attention ? 1 : 0) << '\n';
  out << "deterministic=" << (m.deterministic ? 1 : 0) << '\n';
  return out.str();
}

ModelConfig model_config_from_text(const std::string& text) {
  ModelConfig m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("model config: expected 'key=value', got '" +
                               line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "seed") {
      char* end = nullptr;
      m.seed = std::strtoull(value.c_str(), &end, 10);
      if (end == value.c_str() || *end != '\0')
        throw std::runtime_error("model config: bad seed: " + value);
    } else if (!apply_model_key(m, key, value)) {
      throw std::runtime_error("model config: unknown key '" + key + "'");
    }
  }
  return m;
}

}  // namespace rankae
