#include "sefun/model_io.hpp"

#include <cstring>

#include "binio.hpp"
#include "sefun/errors.hpp"
#include "sefun/taxonomy.hpp"

namespace sefun {

namespace {
constexpr char kMagic[8] = {'S', 'E', 'F', 'U', 'N', 'M', 'D', '1'};
}

void save_model_file(const ModelFile& mf, const std::string& path) {
  binio::Writer w(path);
  w.bytes(kMagic, 8);
  w.u32(static_cast<std::uint32_t>(mf.config.size()));
  for (const auto& [key, value] : mf.config) {
    w.str(key);
    w.f64(value);
  }
  w.u32(static_cast<std::uint32_t>(mf.taxonomy_codes.size()));
  for (const std::string& code : mf.taxonomy_codes) w.str(code);
  w.u32(static_cast<std::uint32_t>(mf.string_lists.size()));
  for (const auto& [name, list] : mf.string_lists) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const std::string& s : list) w.str(s);
  }
  w.u32(static_cast<std::uint32_t>(mf.tensors.size()));
  for (const auto& [name, t] : mf.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) w.u64(d);
    for (double v : t.data) w.f64(v);
  }
  w.close();
}

ModelFile load_model_file(const std::string& path) {
  binio::Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw SchemaVersionMismatchError("\"" + path + "\" is not a SEFUNMD1 model file");
  }
  ModelFile mf;
  const std::uint32_t n_config = r.u32();
  for (std::uint32_t i = 0; i < n_config; ++i) {
    std::string key = r.str();
    mf.config[key] = r.f64();
  }
  const std::uint32_t n_tax = r.u32();
  for (std::uint32_t i = 0; i < n_tax; ++i) mf.taxonomy_codes.push_back(r.str());
  const std::uint32_t n_lists = r.u32();
  for (std::uint32_t i = 0; i < n_lists; ++i) {
    std::string name = r.str();
    const std::uint32_t n = r.u32();
    std::vector<std::string> list;
    list.reserve(n);
    for (std::uint32_t j = 0; j < n; ++j) list.push_back(r.str());
    mf.string_lists[name] = std::move(list);
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<std::size_t>(r.u64());
    Tensor t(shape);
    for (double& v : t.data) v = r.f64();
    mf.tensors[name] = std::move(t);
  }
  return mf;
}

std::vector<std::string> current_taxonomy_codes() {
  std::vector<std::string> codes;
  codes.reserve(kNumLevel2);
  for (std::size_t i = 0; i < kNumLevel2; ++i) {
    codes.push_back(serialize_label(make_sf(static_cast<Level2>(i))));
  }
  return codes;
}

void store_params(ModelFile& mf, const std::vector<const nn::Param*>& params) {
  for (const nn::Param* p : params) {
    if (mf.tensors.count(p->name)) {
      throw Error("duplicate parameter name \"" + p->name + "\" in model file");
    }
    mf.tensors[p->name] = p->value;
  }
}

void load_params(const ModelFile& mf, const std::vector<nn::Param*>& params) {
  for (nn::Param* p : params) {
    auto it = mf.tensors.find(p->name);
    if (it == mf.tensors.end()) {
      throw ParseError("model file is missing parameter \"" + p->name + "\"");
    }
    if (it->second.shape != p->value.shape) {
      throw ShapeMismatchError("parameter \"" + p->name + "\" has unexpected shape");
    }
    p->value = it->second;
    p->grad = Tensor(p->value.shape);
    p->m = Tensor();
    p->v = Tensor();
  }
}

double config_value(const ModelFile& mf, const std::string& key) {
  auto it = mf.config.find(key);
  if (it == mf.config.end()) {
    throw ParseError("model file is missing config key \"" + key + "\"");
  }
  return it->second;
}

void store_train_config(ModelFile& mf, const nn::TrainConfig& c) {
  mf.config["hidden_dim"] = static_cast<double>(c.hidden_dim);
  mf.config["embed_dim"] = static_cast<double>(c.embed_dim);
  mf.config["batch_size"] = static_cast<double>(c.batch_size);
  mf.config["learning_rate"] = c.learning_rate;
  mf.config["clip"] = c.clip;
  mf.config["seed"] = static_cast<double>(c.seed);
  mf.config["max_epochs"] = static_cast<double>(c.max_epochs);
  mf.config["patience"] = static_cast<double>(c.patience);
  mf.config["init_lo"] = c.init_lo;
  mf.config["init_hi"] = c.init_hi;
}

nn::TrainConfig load_train_config(const ModelFile& mf) {
  nn::TrainConfig c;
  c.hidden_dim = static_cast<std::size_t>(config_value(mf, "hidden_dim"));
  c.embed_dim = static_cast<std::size_t>(config_value(mf, "embed_dim"));
  c.batch_size = static_cast<std::size_t>(config_value(mf, "batch_size"));
  c.learning_rate = config_value(mf, "learning_rate");
  c.clip = config_value(mf, "clip");
  c.seed = static_cast<std::uint64_t>(config_value(mf, "seed"));
  c.max_epochs = static_cast<std::size_t>(config_value(mf, "max_epochs"));
  c.patience = static_cast<std::size_t>(config_value(mf, "patience"));
  c.init_lo = config_value(mf, "init_lo");
  c.init_hi = config_value(mf, "init_hi");
  return c;
}

void check_taxonomy(const ModelFile& mf, const std::string& path) {
  if (mf.taxonomy_codes != current_taxonomy_codes()) {
    throw SchemaVersionMismatchError("model file \"" + path +
                                     "\" was written against a different label set");
  }
}

}  // namespace sefun

