#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sefun/errors.hpp"
#include "sefun/model_io.hpp"

using namespace sefun;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("model file round-trips config, lists, taxonomy and tensors bit-exactly") {
  ModelFile mf;
  mf.config["alpha"] = 0.1 + 0.2;  // not representable exactly: bit image must survive
  mf.config["kind"] = 42.0;
  mf.taxonomy_codes = current_taxonomy_codes();
  mf.string_lists["tokens"] = {"<unk>", "苹果", "with space", ""};
  Tensor t(std::vector<std::size_t>{2, 3});
  for (std::size_t i = 0; i < 6; ++i) t.data[i] = 1.0 / double(i + 3);
  mf.tensors["w"] = t;

  std::string path = temp_path("sefun_model_rt.bin");
  save_model_file(mf, path);
  ModelFile back = load_model_file(path);

  CHECK(back.config.at("alpha") == mf.config.at("alpha"));
  CHECK(back.config.at("kind") == 42.0);
  CHECK(back.taxonomy_codes == mf.taxonomy_codes);
  CHECK(back.string_lists.at("tokens") == mf.string_lists.at("tokens"));
  CHECK(back.tensors.at("w") == t);
  std::remove(path.c_str());
}

TEST_CASE("loading a non-model file fails cleanly") {
  std::string path = temp_path("sefun_model_bad.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "definitely not a model";
  }
  CHECK_THROWS_AS(load_model_file(path), SchemaVersionMismatchError);
  std::remove(path.c_str());
}

TEST_CASE("loading a truncated file fails cleanly") {
  ModelFile mf;
  mf.config["kind"] = 1.0;
  mf.tensors["w"] = Tensor(std::vector<std::size_t>{8, 8});
  std::string full = temp_path("sefun_model_full.bin");
  save_model_file(mf, full);

  std::ifstream in(full, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::string cut = temp_path("sefun_model_cut.bin");
  {
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_model_file(cut), ParseError);
  std::remove(full.c_str());
  std::remove(cut.c_str());
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(load_model_file(temp_path("sefun_model_nowhere.bin")), IoError);
}

TEST_CASE("train config round-trips through config entries") {
  nn::TrainConfig c;
  c.hidden_dim = 96;
  c.embed_dim = 48;
  c.batch_size = 7;
  c.learning_rate = 3e-4;
  c.clip = 2.5;
  c.seed = 123456789;
  c.max_epochs = 11;
  c.patience = 2;
  c.init_lo = -0.05;
  c.init_hi = 0.04;

  ModelFile mf;
  store_train_config(mf, c);
  nn::TrainConfig back = load_train_config(mf);
  CHECK(back.hidden_dim == c.hidden_dim);
  CHECK(back.embed_dim == c.embed_dim);
  CHECK(back.batch_size == c.batch_size);
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.clip == c.clip);
  CHECK(back.seed == c.seed);
  CHECK(back.max_epochs == c.max_epochs);
  CHECK(back.patience == c.patience);
  CHECK(back.init_lo == c.init_lo);
  CHECK(back.init_hi == c.init_hi);
}

TEST_CASE("taxonomy check rejects a model written against a different label set") {
  ModelFile mf;
  mf.taxonomy_codes = current_taxonomy_codes();
  CHECK_NOTHROW(check_taxonomy(mf, "m.bin"));

  mf.taxonomy_codes[3] = "DE:Renamed";
  CHECK_THROWS_AS(check_taxonomy(mf, "m.bin"), SchemaVersionMismatchError);

  mf.taxonomy_codes = current_taxonomy_codes();
  mf.taxonomy_codes.pop_back();
  CHECK_THROWS_AS(check_taxonomy(mf, "m.bin"), SchemaVersionMismatchError);
}

TEST_CASE("store / load params by name with shape checks") {
  nn::Param a, b;
  a.init("layer.W", {2, 2});
  b.init("layer.b", {2});
  a.value.data = {1, 2, 3, 4};
  b.value.data = {5, 6};

  ModelFile mf;
  store_params(mf, {&a, &b});

  nn::Param a2, b2;
  a2.init("layer.W", {2, 2});
  b2.init("layer.b", {2});
  load_params(mf, {&a2, &b2});
  CHECK(a2.value == a.value);
  CHECK(b2.value == b.value);

  nn::Param wrong;
  wrong.init("layer.W", {3, 2});
  CHECK_THROWS_AS(load_params(mf, {&wrong}), ShapeMismatchError);

  nn::Param missing;
  missing.init("absent", {1});
  CHECK_THROWS_AS(load_params(mf, {&missing}), ParseError);
}

TEST_CASE("config_value names the missing key") {
  ModelFile mf;
  mf.config["present"] = 1.0;
  CHECK(config_value(mf, "present") == 1.0);
  CHECK_THROWS_AS(config_value(mf, "absent"), ParseError);
}
