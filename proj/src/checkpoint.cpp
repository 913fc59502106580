#include "ppdesign/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "ppdesign/alphabet.hpp"
#include "ppdesign/errors.hpp"

namespace ppdesign {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_schedule(std::ostringstream& out, const std::string& prefix, const ScheduleSpec& s) {
    out << prefix << ".kind " << schedule_kind_name(s.kind) << "\n";
    out << prefix << ".T " << s.T << "\n";
    out << prefix << ".offset " << fmt_double(s.offset) << "\n";
    out << prefix << ".beta_start " << fmt_double(s.beta_start) << "\n";
    out << prefix << ".beta_end " << fmt_double(s.beta_end) << "\n";
    out << prefix << ".steepness " << fmt_double(s.steepness) << "\n";
}

ScheduleSpec read_schedule(const std::map<std::string, std::string>& kv, const std::string& prefix) {
    auto get = [&](const std::string& key) {
        auto it = kv.find(prefix + "." + key);
        if (it == kv.end()) throw ParseError("manifest missing key: " + prefix + "." + key);
        return it->second;
    };
    ScheduleSpec s;
    s.kind = schedule_kind_from_name(get("kind"));
    s.T = std::stoi(get("T"));
    s.offset = std::stod(get("offset"));
    s.beta_start = std::stod(get("beta_start"));
    s.beta_end = std::stod(get("beta_end"));
    s.steepness = std::stod(get("steepness"));
    return s;
}

}  // namespace

std::string manifest_text(const CheckpointMeta& meta, const DenoiserParams& params) {
    std::ostringstream out;
    out << "format_version " << meta.format_version << "\n";
    out << "alphabet_hash " << meta.alphabet_hash << "\n";
    out << "s_norm " << fmt_double(meta.s_norm) << "\n";
    out << "mu_knn " << fmt_double(meta.mu_knn) << "\n";
    out << "step " << meta.step << "\n";
    const DenoiserConfig& c = meta.config;
    out << "d_model " << c.d_model << "\n";
    out << "n_blocks " << c.n_blocks << "\n";
    out << "n_attn_per_block " << c.n_attn_per_block << "\n";
    out << "n_causal " << c.n_causal << "\n";
    out << "n_heads " << c.n_heads << "\n";
    out << "k_nn " << c.k_nn << "\n";
    out << "T " << c.T << "\n";
    out << "K " << c.K << "\n";
    out << "max_len " << c.max_len << "\n";
    out << "ff_mult " << c.ff_mult << "\n";
    write_schedule(out, "schedule.sequence", meta.seq_schedule);
    write_schedule(out, "schedule.structure", meta.struct_schedule);
    for (const auto& t : params.tensors()) {
        out << "tensor " << t.name << " " << t.value.rows() << " " << t.value.cols() << "\n";
    }
    return out.str();
}

void save_checkpoint(const std::string& path_stem, const CheckpointMeta& meta,
                     const DenoiserParams& params) {
    {
        std::ofstream mf(path_stem + ".manifest");
        if (!mf) throw IoError("cannot write manifest: " + path_stem + ".manifest");
        mf << manifest_text(meta, params);
        if (!mf.good()) throw IoError("manifest write failed: " + path_stem + ".manifest");
    }
    std::ofstream bf(path_stem + ".bin", std::ios::binary);
    if (!bf) throw IoError("cannot write blob: " + path_stem + ".bin");
    std::vector<float> buf;
    for (const auto& t : params.tensors()) {
        buf.clear();
        buf.reserve(static_cast<size_t>(t.value.size()));
        for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
            for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
                buf.push_back(static_cast<float>(t.value(i, j)));
            }
        }
        bf.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!bf.good()) throw IoError("blob write failed: " + path_stem + ".bin");
}

std::pair<CheckpointMeta, DenoiserParams> load_checkpoint(const std::string& path_stem) {
    std::ifstream mf(path_stem + ".manifest");
    if (!mf) throw IoError("cannot open manifest: " + path_stem + ".manifest");

    std::map<std::string, std::string> kv;
    std::vector<NamedTensor> tensors;
    std::string line;
    long line_no = 0;
    while (std::getline(mf, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "tensor") {
            std::string name;
            Eigen::Index rows, cols;
            if (!(ls >> name >> rows >> cols)) throw ParseError("malformed tensor line", line_no);
            tensors.push_back({name, Eigen::MatrixXd::Zero(rows, cols)});
        } else {
            std::string rest;
            std::getline(ls, rest);
            if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
            kv[key] = rest;
        }
    }

    auto get = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError("manifest missing key: " + key);
        return it->second;
    };

    CheckpointMeta meta;
    meta.format_version = std::stoi(get("format_version"));
    if (meta.format_version != 1) {
        throw ConfigError("unsupported checkpoint format version " +
                          std::to_string(meta.format_version));
    }
    meta.alphabet_hash = std::stoull(get("alphabet_hash"));
    if (meta.alphabet_hash != alphabet_hash()) {
        throw ConfigError("checkpoint alphabet hash mismatch: refusing to load weights built "
                          "against a different alphabet table");
    }
    meta.s_norm = std::stod(get("s_norm"));
    meta.mu_knn = std::stod(get("mu_knn"));
    meta.step = std::stol(get("step"));
    meta.config.d_model = std::stoi(get("d_model"));
    meta.config.n_blocks = std::stoi(get("n_blocks"));
    meta.config.n_attn_per_block = std::stoi(get("n_attn_per_block"));
    meta.config.n_causal = std::stoi(get("n_causal"));
    meta.config.n_heads = std::stoi(get("n_heads"));
    meta.config.k_nn = std::stoi(get("k_nn"));
    meta.config.T = std::stoi(get("T"));
    meta.config.K = std::stoi(get("K"));
    meta.config.max_len = std::stoi(get("max_len"));
    meta.config.ff_mult = std::stoi(get("ff_mult"));
    meta.seq_schedule = read_schedule(kv, "schedule.sequence");
    meta.struct_schedule = read_schedule(kv, "schedule.structure");

    std::ifstream bf(path_stem + ".bin", std::ios::binary);
    if (!bf) throw IoError("cannot open blob: " + path_stem + ".bin");
    for (auto& t : tensors) {
        std::vector<float> buf(static_cast<size_t>(t.value.size()));
        bf.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (bf.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
            throw ParseError("blob truncated at tensor '" + t.name + "'");
        }
        size_t k = 0;
        for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
            for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
                t.value(i, j) = static_cast<double>(buf[k++]);
            }
        }
    }
    char extra;
    if (bf.read(&extra, 1) && bf.gcount() == 1) {
        throw ParseError("blob has trailing bytes: " + path_stem + ".bin");
    }

    DenoiserParams params = DenoiserParams::from_tensors(meta.config, std::move(tensors));
    return {meta, std::move(params)};
}

}  // namespace ppdesign
