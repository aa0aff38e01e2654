#include "rulewise/autodiff/checkpoint.hpp"

#include "rulewise/common/atomic_file.hpp"
#include "rulewise/common/error.hpp"
#include "rulewise/common/text_format.hpp"

#include <sstream>

namespace rulewise::ad {

namespace {

constexpr const char* kMagic = "rulewise-checkpoint 1";

void write_vector(std::ostringstream& out, const char* key, const std::vector<double>& v) {
  out << key << ' ' << v.size() << '\n';
  for (double x : v) out << format_double(x) << '\n';
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  std::string next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    throw DataError("checkpoint truncated");
  }

  std::string value(const std::string& key) {
    const auto line = next();
    const auto sp = line.find(' ');
    if (sp == std::string::npos || line.substr(0, sp) != key)
      throw DataError("checkpoint line " + std::to_string(line_) + ": expected '" + key + "'");
    return line.substr(sp + 1);
  }

  std::size_t count(const std::string& key) { return std::stoull(value(key)); }

  std::vector<double> numbers(std::size_t n) {
    std::vector<double> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto line = next();
      try {
        v.push_back(parse_double(line));
      } catch (const std::exception&) {
        throw DataError("checkpoint line " + std::to_string(line_) + ": bad number");
      }
    }
    return v;
  }

  bool at_end() {
    std::string line;
    while (std::getline(in_, line)) {
      if (!line.empty() && line != "\r") {
        pending_ = line;
        return false;
      }
    }
    return true;
  }
  std::string pending_;

 private:
  std::istringstream in_;
  std::size_t line_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
  const auto& spec = cp.network.spec();
  std::ostringstream out;
  out << kMagic << '\n'
      << "input_dim " << spec.input_dim << '\n'
      << "output_dim " << spec.output_dim << '\n'
      << "hidden_layers " << spec.hidden_layers << '\n'
      << "hidden_width " << spec.hidden_width << '\n'
      << "activation " << to_string(spec.activation) << '\n'
      << "rng_seed " << cp.network.seed() << '\n';
  const auto p = cp.network.parameters();
  write_vector(out, "parameters", std::vector<double>(p.begin(), p.end()));
  if (cp.optimizer) {
    const auto& o = *cp.optimizer;
    out << "adam_step " << o.step << '\n'
        << "adam_lr " << format_double(o.lr) << '\n'
        << "adam_beta1 " << format_double(o.beta1) << '\n'
        << "adam_beta2 " << format_double(o.beta2) << '\n'
        << "adam_eps_hat " << format_double(o.eps_hat) << '\n';
    write_vector(out, "first_moment", o.first_moment);
    write_vector(out, "second_moment", o.second_moment);
  }
  out << "end\n";
  return out.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  LineReader r(text);
  if (r.next() != kMagic) throw DataError("not a rulewise checkpoint");
  try {
    NetworkSpec spec;
    spec.input_dim = r.count("input_dim");
    spec.output_dim = r.count("output_dim");
    spec.hidden_layers = r.count("hidden_layers");
    spec.hidden_width = r.count("hidden_width");
    spec.activation = parse_activation(r.value("activation"));
    const auto seed = std::stoull(r.value("rng_seed"));
    auto params = r.numbers(r.count("parameters"));
    Checkpoint cp{Network(spec, std::move(params), seed), std::nullopt};
    auto line = r.next();
    if (line == "end") return cp;
    if (line.rfind("adam_step ", 0) != 0) throw DataError("unexpected checkpoint line '" + line + "'");
    AdamState o;
    o.step = std::stoull(line.substr(10));
    o.lr = parse_double(r.value("adam_lr"));
    o.beta1 = parse_double(r.value("adam_beta1"));
    o.beta2 = parse_double(r.value("adam_beta2"));
    o.eps_hat = parse_double(r.value("adam_eps_hat"));
    o.first_moment = r.numbers(r.count("first_moment"));
    o.second_moment = r.numbers(r.count("second_moment"));
    if (o.first_moment.size() != spec.parameter_count() || o.second_moment.size() != spec.parameter_count())
      throw DataError("checkpoint optimizer moments have the wrong length");
    if (r.next() != "end") throw DataError("checkpoint missing end marker");
    cp.optimizer = std::move(o);
    return cp;
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid checkpoint: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw DataError(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(cp));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace rulewise::ad
