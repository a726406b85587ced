#include "interact/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "interact/util.hpp"

namespace interact {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'I', 'T', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_floats(std::ostream& out, const float* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw CheckpointCorruptError("checkpoint truncated while reading u32");
  }
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw CheckpointCorruptError("checkpoint truncated while reading u64");
  }
  return v;
}
std::string read_string(std::istream& in, std::uint64_t max_len = 1ULL << 30) {
  const std::uint64_t len = read_u64(in);
  if (len > max_len) throw CheckpointCorruptError("checkpoint string length implausible");
  std::string s(len, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(len))) {
    throw CheckpointCorruptError("checkpoint truncated while reading string");
  }
  return s;
}
void read_floats(std::istream& in, float* data, std::size_t count) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 4))) {
    throw CheckpointCorruptError("checkpoint truncated while reading parameter data");
  }
}

json config_to_json(const ModelConfig& cfg) {
  return json{{"horizon", cfg.horizon},   {"human_dim", cfg.human_dim},
              {"robot_dim", cfg.robot_dim}, {"embed_dim", cfg.embed_dim},
              {"layers", cfg.layers},     {"heads", cfg.heads},
              {"variant", to_string(cfg.variant)}};
}

ModelConfig config_from_json(const json& doc) {
  ModelConfig cfg;
  cfg.horizon = doc.at("horizon").get<int>();
  cfg.human_dim = doc.at("human_dim").get<int>();
  cfg.robot_dim = doc.at("robot_dim").get<int>();
  cfg.embed_dim = doc.at("embed_dim").get<int>();
  cfg.layers = doc.at("layers").get<int>();
  cfg.heads = doc.at("heads").get<int>();
  cfg.variant = variant_from_string(doc.at("variant").get<std::string>());
  return cfg;
}

struct StoredParam {
  std::string name;
  int rows = 0;
  int cols = 0;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> value;
};

struct ParsedFile {
  json header;
  std::vector<StoredParam> params;
  bool has_optimizer = false;
  long long opt_step = 0;
  std::vector<StoredParam> opt_m;
  std::vector<StoredParam> opt_v;
  std::string rng_state;
};

ParsedFile parse_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointCorruptError("cannot open checkpoint " + path.string());

  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointCorruptError("not a checkpoint file: bad magic in " + path.string());
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(version) +
                                 " unsupported (expected " + std::to_string(kVersion) + ")");
  }

  ParsedFile file;
  const std::string header_text = read_string(in);
  try {
    file.header = json::parse(header_text);
  } catch (const json::parse_error& e) {
    throw CheckpointCorruptError("checkpoint header is not valid JSON: " + std::string(e.what()));
  }

  auto read_param_block = [&in]() {
    StoredParam p;
    p.name = read_string(in, 1 << 16);
    p.rows = static_cast<int>(read_u32(in));
    p.cols = static_cast<int>(read_u32(in));
    if (p.rows <= 0 || p.cols <= 0 || static_cast<long long>(p.rows) * p.cols > (1LL << 32)) {
      throw CheckpointCorruptError("checkpoint parameter '" + p.name + "' has implausible shape");
    }
    p.value.resize(p.rows, p.cols);
    read_floats(in, p.value.data(), static_cast<std::size_t>(p.rows) * p.cols);
    return p;
  };

  const std::uint32_t count = read_u32(in);
  file.params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) file.params.push_back(read_param_block());

  char opt_flag = 0;
  if (!in.read(&opt_flag, 1)) throw CheckpointCorruptError("checkpoint truncated before optimizer flag");
  file.has_optimizer = opt_flag != 0;
  if (file.has_optimizer) {
    file.opt_step = static_cast<long long>(read_u64(in));
    for (std::uint32_t i = 0; i < count; ++i) file.opt_m.push_back(read_param_block());
    for (std::uint32_t i = 0; i < count; ++i) file.opt_v.push_back(read_param_block());
  }
  file.rng_state = read_string(in);
  return file;
}

void apply_params(InteractModel<float>& model, const ParsedFile& file) {
  const auto& live = model.params().all();
  if (live.size() != file.params.size()) {
    throw CheckpointShapeError("checkpoint holds " + std::to_string(file.params.size()) +
                               " tensors, model registers " + std::to_string(live.size()));
  }
  for (const auto& stored : file.params) {
    TensorPtr<float> target;
    try {
      target = model.params().get(stored.name);
    } catch (const std::invalid_argument&) {
      throw CheckpointShapeError("checkpoint parameter '" + stored.name +
                                 "' does not exist in the model");
    }
    if (target->rows() != stored.rows || target->cols() != stored.cols) {
      throw CheckpointShapeError("parameter '" + stored.name + "' is " +
                                 std::to_string(stored.rows) + "x" + std::to_string(stored.cols) +
                                 " in the checkpoint but " + std::to_string(target->rows()) + "x" +
                                 std::to_string(target->cols()) + " in the model");
    }
    target->value = stored.value;
  }
}

}  // namespace

void save_checkpoint(const fs::path& path, const InteractModel<float>& model,
                     const OptimizerState<float>* optimizer, int epoch,
                     const std::string& rng_state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());

  json header = config_to_json(model.config());
  header["epoch"] = epoch;
  const std::string config_text = header.dump();
  header["config_hash"] = to_hex(fnv1a64(config_text));
  if (optimizer != nullptr) {
    header["adam"] = {{"beta1", optimizer->config.beta1},
                      {"beta2", optimizer->config.beta2},
                      {"eps", optimizer->config.eps},
                      {"weight_decay", optimizer->config.weight_decay}};
  }

  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_string(out, header.dump());

  const auto& params = model.params().all();
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  auto write_block = [&out](const std::string& name, const auto& matrix) {
    write_string(out, name);
    write_u32(out, static_cast<std::uint32_t>(matrix.rows()));
    write_u32(out, static_cast<std::uint32_t>(matrix.cols()));
    write_floats(out, matrix.data(), static_cast<std::size_t>(matrix.size()));
  };
  for (const auto& p : params) write_block(p->name, p->value);

  const char opt_flag = optimizer != nullptr ? 1 : 0;
  out.write(&opt_flag, 1);
  if (optimizer != nullptr) {
    write_u64(out, static_cast<std::uint64_t>(optimizer->step));
    for (std::size_t i = 0; i < params.size(); ++i) write_block(params[i]->name, optimizer->m[i]);
    for (std::size_t i = 0; i < params.size(); ++i) write_block(params[i]->name, optimizer->v[i]);
  }
  write_string(out, rng_state);
  if (!out) throw std::runtime_error("write failure on checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  const ParsedFile file = parse_file(path);
  LoadedCheckpoint loaded;
  try {
    loaded.config = config_from_json(file.header);
    loaded.epoch = file.header.at("epoch").get<int>();
    loaded.config_hash = file.header.value("config_hash", "");
  } catch (const json::exception& e) {
    throw CheckpointCorruptError("checkpoint header missing fields: " + std::string(e.what()));
  }
  loaded.rng_state = file.rng_state;
  loaded.model = std::make_unique<InteractModel<float>>(loaded.config, /*seed=*/0);
  apply_params(*loaded.model, file);

  if (file.has_optimizer) {
    OptimizerState<float> opt;
    if (file.header.contains("adam")) {
      const json& adam = file.header.at("adam");
      opt.config.beta1 = adam.value("beta1", opt.config.beta1);
      opt.config.beta2 = adam.value("beta2", opt.config.beta2);
      opt.config.eps = adam.value("eps", opt.config.eps);
      opt.config.weight_decay = adam.value("weight_decay", opt.config.weight_decay);
    }
    opt.init(loaded.model->params());
    opt.step = file.opt_step;
    const auto& live = loaded.model->params().all();
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (file.opt_m[i].name != live[i]->name) {
        throw CheckpointShapeError("optimizer moment order mismatch at '" +
                                   file.opt_m[i].name + "'");
      }
      opt.m[i] = file.opt_m[i].value;
      opt.v[i] = file.opt_v[i].value;
    }
    loaded.optimizer = std::move(opt);
  }
  return loaded;
}

void restore_checkpoint(const fs::path& path, InteractModel<float>& model) {
  const ParsedFile file = parse_file(path);
  apply_params(model, file);
}

}  // namespace interact
