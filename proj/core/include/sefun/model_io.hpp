#ifndef SEFUN_MODEL_IO_HPP
#define SEFUN_MODEL_IO_HPP

// Versioned binary model container. Layout (all little-endian):
//   magic "SEFUNMD1"
//   u32 config count,   entries: string key, f64 value
//   u32 taxonomy count, entries: string code
//   u32 list count,     entries: string name, u32 size, strings
//   u32 tensor count,   entries: string name, u32 rank, u64 dims..., f64 values
// Doubles are stored as raw bit images, so round-trips are bit-exact.

#include <map>
#include <string>
#include <vector>

#include "sefun/nn.hpp"
#include "sefun/tensor.hpp"

namespace sefun {

struct ModelFile {
  std::map<std::string, double> config;
  std::vector<std::string> taxonomy_codes;
  std::map<std::string, std::vector<std::string>> string_lists;
  std::map<std::string, Tensor> tensors;
};

void save_model_file(const ModelFile& mf, const std::string& path);
ModelFile load_model_file(const std::string& path);

// The 20 serialized level-2 labels in code order; stored in every model file
// so a stale model cannot be silently read against a changed label set.
std::vector<std::string> current_taxonomy_codes();

// Move params into / out of a container by name. Loading checks presence and
// shape and overwrites values only (grads and moments reset).
void store_params(ModelFile& mf, const std::vector<const nn::Param*>& params);
void load_params(const ModelFile& mf, const std::vector<nn::Param*>& params);

double config_value(const ModelFile& mf, const std::string& key);

// Training hyperparameters as config entries, shared by every model kind.
void store_train_config(ModelFile& mf, const nn::TrainConfig& c);
nn::TrainConfig load_train_config(const ModelFile& mf);

// Throws SchemaVersionMismatchError if the stored label set differs.
void check_taxonomy(const ModelFile& mf, const std::string& path);

}  // namespace sefun

#endif  // SEFUN_MODEL_IO_HPP
