#include "core/model/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "core/util/error.hpp"
#include "core/util/io.hpp"

namespace pixelrep {

using nlohmann::json;

namespace {

void write_f32(const std::string& path, const float* data, size_t n) {
    write_binary_file(path, data, n * sizeof(float));
}

std::vector<float> read_f32(const std::string& path, size_t expect) {
    auto bytes = read_binary_file(path);
    require(bytes.size() == expect * sizeof(float), ErrorCode::Io, "tensor file ", path,
            " holds ", bytes.size() / sizeof(float), " values, expected ", expect);
    std::vector<float> out(expect);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

}  // namespace

void save_checkpoint(const std::string& dir, Model<float>& model, const TrainerState& state,
                     const AdamState<float>* optimizer) {
    ensure_dir(dir);
    ensure_dir(dir + "/params");
    write_text_file(dir + "/config.json", model.config().to_json().dump(2) + "\n");

    json manifest;
    manifest["tensors"] = json::array();
    for (auto& [name, t] : model.named_params()) {
        std::string file = name + ".bin";
        write_f32(dir + "/params/" + file, t.data(), size_t(t.numel()));
        manifest["tensors"].push_back({{"name", name}, {"shape", t.shape()}, {"file", file}});
    }
    manifest["buffers"] = json::array();
    if (model.config().pixel()) {
        auto& bn = model.bn_state();
        write_f32(dir + "/params/bn.running_mean.bin", bn.running_mean.data(),
                  bn.running_mean.size());
        write_f32(dir + "/params/bn.running_var.bin", bn.running_var.data(),
                  bn.running_var.size());
        manifest["buffers"].push_back(
            {{"name", "bn.running_mean"}, {"size", bn.running_mean.size()}});
        manifest["buffers"].push_back(
            {{"name", "bn.running_var"}, {"size", bn.running_var.size()}});
    }
    write_text_file(dir + "/params/manifest.json", manifest.dump(2) + "\n");

    json tj;
    tj["step"] = state.step;
    tj["best_val_ppl"] = state.best_val_ppl;
    tj["history"] = json::array();
    for (auto& [s, p] : state.history) tj["history"].push_back({{"step", s}, {"ppl", p}});
    tj["src_vocab_hash"] = state.src_vocab_hash;
    tj["tgt_vocab_hash"] = state.tgt_vocab_hash;
    write_text_file(dir + "/trainer.json", tj.dump(2) + "\n");

    if (optimizer) {
        ensure_dir(dir + "/optimizer");
        json oj;
        oj["step"] = optimizer->step_count();
        oj["slots"] = optimizer->slots();
        write_text_file(dir + "/optimizer/state.json", oj.dump(2) + "\n");
        for (size_t i = 0; i < optimizer->slots(); ++i) {
            write_f32(dir + "/optimizer/" + std::to_string(i) + ".m.bin",
                      optimizer->m(i).data(), optimizer->m(i).size());
            write_f32(dir + "/optimizer/" + std::to_string(i) + ".v.bin",
                      optimizer->v(i).data(), optimizer->v(i).size());
        }
    }
}

LoadedCheckpoint load_checkpoint(const std::string& dir, bool with_optimizer) {
    LoadedCheckpoint out;
    ModelConfig cfg = ModelConfig::from_json(json::parse(read_text_file(dir + "/config.json")));
    out.model = std::make_unique<Model<float>>(cfg, Rng(0));

    json manifest = json::parse(read_text_file(dir + "/params/manifest.json"));
    std::map<std::string, json> listed;
    for (const auto& e : manifest["tensors"]) listed[e["name"].get<std::string>()] = e;
    for (auto& [name, t] : out.model->named_params()) {
        auto it = listed.find(name);
        require(it != listed.end(), ErrorCode::Io, "checkpoint missing tensor ", name);
        Shape shape = it->second["shape"].get<Shape>();
        require(shape == t.shape(), ErrorCode::Io, "checkpoint tensor ", name, " has shape ",
                shape_str(shape), ", model expects ", shape_str(t.shape()));
        t.values() = read_f32(dir + "/params/" + it->second["file"].get<std::string>(),
                              size_t(t.numel()));
        listed.erase(it);
    }
    require(listed.empty(), ErrorCode::Io, "checkpoint holds ", listed.size(),
            " tensors unknown to this config");
    if (cfg.pixel()) {
        auto& bn = out.model->bn_state();
        bn.running_mean = read_f32(dir + "/params/bn.running_mean.bin", bn.running_mean.size());
        bn.running_var = read_f32(dir + "/params/bn.running_var.bin", bn.running_var.size());
    }

    json tj = json::parse(read_text_file(dir + "/trainer.json"));
    out.state.step = tj.value("step", int64_t(0));
    out.state.best_val_ppl = tj.value("best_val_ppl", 0.0);
    for (const auto& e : tj["history"])
        out.state.history.emplace_back(e["step"].get<int64_t>(), e["ppl"].get<double>());
    out.state.src_vocab_hash = tj.value("src_vocab_hash", "");
    out.state.tgt_vocab_hash = tj.value("tgt_vocab_hash", "");

    if (with_optimizer && std::filesystem::exists(dir + "/optimizer/state.json")) {
        json oj = json::parse(read_text_file(dir + "/optimizer/state.json"));
        out.optimizer = std::make_unique<AdamState<float>>();
        auto params = out.model->param_tensors();
        out.optimizer->attach(params);
        out.optimizer->set_step_count(oj["step"].get<int64_t>());
        require(oj["slots"].get<size_t>() == params.size(), ErrorCode::Io,
                "optimizer state does not match parameter count");
        for (size_t i = 0; i < params.size(); ++i) {
            out.optimizer->m(i) = read_f32(dir + "/optimizer/" + std::to_string(i) + ".m.bin",
                                           size_t(params[i].numel()));
            out.optimizer->v(i) = read_f32(dir + "/optimizer/" + std::to_string(i) + ".v.bin",
                                           size_t(params[i].numel()));
        }
    }
    return out;
}

}  // namespace pixelrep
