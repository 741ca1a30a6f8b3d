#include "core/model/config.hpp"

#include "core/util/error.hpp"

namespace pixelrep {

std::string to_string(SourceMode m) { return m == SourceMode::Pixel ? "pixel" : "subword"; }

SourceMode source_mode_from_string(const std::string& s) {
    if (s == "pixel") return SourceMode::Pixel;
    if (s == "subword") return SourceMode::Subword;
    fail(ErrorCode::Config, "source_mode must be 'pixel' or 'subword', got '", s, "'");
}

void ModelConfig::validate() const {
    require(d_model > 0 && heads > 0, ErrorCode::Config, "d_model and heads must be positive");
    require(d_model % heads == 0, ErrorCode::Config, "d_model ", d_model,
            " must be divisible by heads ", heads);
    require(enc_layers > 0 && dec_layers > 0, ErrorCode::Config, "layer counts must be positive");
    require(ff_width > 0, ErrorCode::Config, "ff_width must be positive");
    require(dropout >= 0 && dropout < 1, ErrorCode::Config, "dropout must be in [0,1)");
    require(label_smoothing >= 0 && label_smoothing < 1, ErrorCode::Config,
            "label_smoothing must be in [0,1)");
    require(v_tgt > 4, ErrorCode::Config, "v_tgt must exceed the 4 special ids");
    if (pixel()) {
        require(v_src == 0, ErrorCode::Config,
                "pixel models are vocabulary-free; v_src must be absent (0)");
        require(conv_channels > 0, ErrorCode::Config, "conv_channels must be positive");
        window.validate();
        require(window.h >= 3, ErrorCode::Config, "window height too small for the 3x1 kernel");
    } else {
        require(v_src > 4, ErrorCode::Config, "subword models need v_src > 4");
    }
    require(max_positions > 1, ErrorCode::Config, "max_positions too small");
}

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json j;
    j["source_mode"] = to_string(source_mode);
    j["enc_layers"] = enc_layers;
    j["dec_layers"] = dec_layers;
    j["d_model"] = d_model;
    j["ff_width"] = ff_width;
    j["heads"] = heads;
    j["dropout"] = dropout;
    j["label_smoothing"] = label_smoothing;
    if (!pixel()) j["v_src"] = v_src;
    j["v_tgt"] = v_tgt;
    if (pixel()) {
        j["window"] = {{"h", window.h}, {"w", window.w}, {"s", window.s}};
        j["conv_channels"] = conv_channels;
    }
    j["tied_output"] = tied_output;
    j["max_positions"] = max_positions;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.source_mode = source_mode_from_string(j.at("source_mode").get<std::string>());
    c.enc_layers = j.value("enc_layers", c.enc_layers);
    c.dec_layers = j.value("dec_layers", c.dec_layers);
    c.d_model = j.value("d_model", c.d_model);
    c.ff_width = j.value("ff_width", c.ff_width);
    c.heads = j.value("heads", c.heads);
    c.dropout = j.value("dropout", c.dropout);
    c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
    c.v_src = j.value("v_src", int64_t(0));
    c.v_tgt = j.value("v_tgt", c.v_tgt);
    if (j.contains("window")) {
        c.window.h = j["window"].value("h", c.window.h);
        c.window.w = j["window"].value("w", c.window.w);
        c.window.s = j["window"].value("s", c.window.s);
    }
    c.conv_channels = j.value("conv_channels", c.conv_channels);
    c.tied_output = j.value("tied_output", c.tied_output);
    c.max_positions = j.value("max_positions", c.max_positions);
    c.validate();
    return c;
}

ParamCounts count_params(const ModelConfig& cfg) {
    cfg.validate();
    ParamCounts pc;
    const int64_t d = cfg.d_model;
    if (cfg.pixel()) {
        const int64_t ch = cfg.conv_channels;
        const int64_t conv_out_h = cfg.window.h - 2;  // 3x1 valid kernel
        const int64_t flat = ch * conv_out_h * cfg.window.w;
        pc.source_embedder = (ch * 1 * 3 * 1 + ch)  // conv weight + bias
                             + 2 * ch               // batchnorm gamma + beta
                             + flat * d + d;        // projection + bias
    } else {
        pc.source_embedder = cfg.v_src * d;
    }
    pc.target_embedding = cfg.v_tgt * d;
    pc.output_projection = cfg.tied_output ? 0 : d * cfg.v_tgt + cfg.v_tgt;

    const int64_t attn = 4 * (d * d + d);
    const int64_t ff = d * cfg.ff_width + cfg.ff_width + cfg.ff_width * d + d;
    const int64_t ln = 2 * d;
    pc.encoder = cfg.enc_layers * (attn + ff + 2 * ln);
    pc.decoder = cfg.dec_layers * (2 * attn + ff + 3 * ln);
    pc.final_norms = 2 * ln;
    return pc;
}

}  // namespace pixelrep
