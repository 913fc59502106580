#include "ppdesign/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ppdesign/errors.hpp"

namespace ppdesign {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_bool(const std::string& v, long line_no) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ParseError("expected on/off, got '" + v + "'", line_no);
}

void apply_schedule_key(ScheduleSpec& s, const std::string& key, const std::string& value,
                        long line_no) {
    if (key == "kind") {
        s.kind = schedule_kind_from_name(value);
    } else if (key == "T") {
        s.T = std::stoi(value);
    } else if (key == "offset") {
        s.offset = std::stod(value);
    } else if (key == "beta_start") {
        s.beta_start = std::stod(value);
    } else if (key == "beta_end") {
        s.beta_end = std::stod(value);
    } else if (key == "steepness") {
        s.steepness = std::stod(value);
    } else {
        throw ParseError("unknown schedule key '" + key + "'", line_no);
    }
}

void write_schedule(std::ostringstream& out, const std::string& section, const ScheduleSpec& s) {
    out << "[" << section << "]\n";
    out << "kind = " << schedule_kind_name(s.kind) << "\n";
    out << "T = " << s.T << "\n";
    out << "offset = " << fmt(s.offset) << "\n";
    out << "beta_start = " << fmt(s.beta_start) << "\n";
    out << "beta_end = " << fmt(s.beta_end) << "\n";
    out << "steepness = " << fmt(s.steepness) << "\n\n";
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    train.validate();
    if (seq_schedule.T != struct_schedule.T) {
        throw ConfigError("config: sequence and structure schedules must share T");
    }
    if (model.T != seq_schedule.T) {
        throw ConfigError("config: model T must match the schedule T");
    }
    if (guid_k < 1 || guid_n_init < 1) {
        throw ConfigError("config: guidance k and n_init must be >= 1");
    }
}

RunConfig parse_run_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError("unterminated section header", line_no);
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) throw ParseError("empty key or value", line_no);

        try {
            if (section == "run") {
                if (key == "seed") {
                    cfg.seed = std::stoull(value);
                    cfg.seed_set = true;
                } else {
                    throw ParseError("unknown [run] key '" + key + "'", line_no);
                }
            } else if (section == "schedule.sequence") {
                apply_schedule_key(cfg.seq_schedule, key, value, line_no);
            } else if (section == "schedule.structure") {
                apply_schedule_key(cfg.struct_schedule, key, value, line_no);
            } else if (section == "model") {
                if (key == "d_model") cfg.model.d_model = std::stoi(value);
                else if (key == "n_blocks") cfg.model.n_blocks = std::stoi(value);
                else if (key == "n_attn_per_block") cfg.model.n_attn_per_block = std::stoi(value);
                else if (key == "n_causal") cfg.model.n_causal = std::stoi(value);
                else if (key == "n_heads") cfg.model.n_heads = std::stoi(value);
                else if (key == "k_nn") cfg.model.k_nn = std::stoi(value);
                else if (key == "max_len") cfg.model.max_len = std::stoi(value);
                else if (key == "ff_mult") cfg.model.ff_mult = std::stoi(value);
                else throw ParseError("unknown [model] key '" + key + "'", line_no);
            } else if (section == "train") {
                if (key == "lr") cfg.train.lr = std::stod(value);
                else if (key == "warmup_steps") cfg.train.warmup_steps = std::stoi(value);
                else if (key == "total_steps") cfg.train.total_steps = std::stoi(value);
                else if (key == "batch_tokens") cfg.train.batch_tokens = std::stoi(value);
                else if (key == "w_seq") cfg.train.w_seq = std::stod(value);
                else if (key == "w_coord") cfg.train.w_coord = std::stod(value);
                else if (key == "clip_norm") cfg.train.clip_norm = std::stod(value);
                else if (key == "checkpoint_interval") cfg.train.checkpoint_interval = std::stoi(value);
                else if (key == "s_norm") cfg.train.s_norm = std::stod(value);
                else if (key == "mu_knn_k") cfg.train.mu_knn_k = std::stoi(value);
                else throw ParseError("unknown [train] key '" + key + "'", line_no);
            } else if (section == "guidance") {
                if (key == "k") cfg.guid_k = std::stoi(value);
                else if (key == "n_init") cfg.guid_n_init = std::stoi(value);
                else if (key == "sequence") cfg.guid_seq = parse_bool(value, line_no);
                else if (key == "structure") cfg.guid_struct = parse_bool(value, line_no);
                else if (key == "fragments") cfg.fragments_path = value;
                else throw ParseError("unknown [guidance] key '" + key + "'", line_no);
            } else if (section == "paths") {
                if (key == "data") cfg.data_path = value;
                else if (key == "out_dir") cfg.out_dir = value;
                else if (key == "checkpoint") cfg.checkpoint_path = value;
                else throw ParseError("unknown [paths] key '" + key + "'", line_no);
            } else {
                throw ParseError("unknown section '" + section + "'", line_no);
            }
        } catch (const std::invalid_argument&) {
            throw ParseError("bad value '" + value + "' for key '" + key + "'", line_no);
        } catch (const std::out_of_range&) {
            throw ParseError("value out of range for key '" + key + "'", line_no);
        }
    }
    // Keep the model's timestep range in lockstep with the schedules unless
    // set apart on purpose.
    cfg.model.T = cfg.seq_schedule.T;
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config_text(buf.str());
}

std::string dump_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[run]\n";
    out << "seed = " << cfg.seed << "\n\n";
    write_schedule(out, "schedule.sequence", cfg.seq_schedule);
    write_schedule(out, "schedule.structure", cfg.struct_schedule);
    out << "[model]\n";
    out << "d_model = " << cfg.model.d_model << "\n";
    out << "n_blocks = " << cfg.model.n_blocks << "\n";
    out << "n_attn_per_block = " << cfg.model.n_attn_per_block << "\n";
    out << "n_causal = " << cfg.model.n_causal << "\n";
    out << "n_heads = " << cfg.model.n_heads << "\n";
    out << "k_nn = " << cfg.model.k_nn << "\n";
    out << "max_len = " << cfg.model.max_len << "\n";
    out << "ff_mult = " << cfg.model.ff_mult << "\n\n";
    out << "[train]\n";
    out << "lr = " << fmt(cfg.train.lr) << "\n";
    out << "warmup_steps = " << cfg.train.warmup_steps << "\n";
    out << "total_steps = " << cfg.train.total_steps << "\n";
    out << "batch_tokens = " << cfg.train.batch_tokens << "\n";
    out << "w_seq = " << fmt(cfg.train.w_seq) << "\n";
    out << "w_coord = " << fmt(cfg.train.w_coord) << "\n";
    out << "clip_norm = " << fmt(cfg.train.clip_norm) << "\n";
    out << "checkpoint_interval = " << cfg.train.checkpoint_interval << "\n";
    out << "s_norm = " << fmt(cfg.train.s_norm) << "\n";
    out << "mu_knn_k = " << cfg.train.mu_knn_k << "\n\n";
    out << "[guidance]\n";
    out << "k = " << cfg.guid_k << "\n";
    out << "n_init = " << cfg.guid_n_init << "\n";
    out << "sequence = " << (cfg.guid_seq ? "on" : "off") << "\n";
    out << "structure = " << (cfg.guid_struct ? "on" : "off") << "\n";
    if (!cfg.fragments_path.empty()) out << "fragments = " << cfg.fragments_path << "\n";
    out << "\n[paths]\n";
    if (!cfg.data_path.empty()) out << "data = " << cfg.data_path << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    if (!cfg.checkpoint_path.empty()) out << "checkpoint = " << cfg.checkpoint_path << "\n";
    return out.str();
}

}  // namespace ppdesign
