#include "ppdesign/complex_record.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ppdesign/alphabet.hpp"
#include "ppdesign/errors.hpp"

namespace ppdesign {

namespace {

void validate_chain(const Chain& c, const std::string& what) {
    if (!is_canonical_sequence(c.seq)) {
        throw ContractError(what + " sequence contains non-canonical letters: " + c.seq);
    }
    if (c.coords.rows() != static_cast<Eigen::Index>(c.seq.size()) || c.coords.cols() != 3) {
        throw ContractError(what + " coordinate shape does not match sequence length");
    }
    if (!c.coords.allFinite()) {
        throw ContractError(what + " coordinates contain non-finite values");
    }
}

std::string format_coord_line(const char* tag, double x, double y, double z) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s %.3f %.3f %.3f", tag, x, y, z);
    return buf;
}

}  // namespace

void ComplexRecord::validate() const {
    if (id.empty()) throw ContractError("complex record has empty id");
    validate_chain(target, "target");
    validate_chain(binder, "binder");
}

void write_record(std::ostream& out, const ComplexRecord& rec, const CandidateMeta* meta) {
    out << "#complex " << rec.id << "\n";
    if (meta != nullptr) {
        out << "#meta seed=" << meta->seed << " guidance_seq=" << (meta->guidance_seq ? 1 : 0)
            << " guidance_struct=" << (meta->guidance_struct ? 1 : 0);
        char buf[48];
        std::snprintf(buf, sizeof(buf), " init_energy=%.6g", meta->init_energy);
        out << buf << "\n";
    }
    out << "T " << rec.target.seq << "\n";
    for (int i = 0; i < rec.target.coords.rows(); ++i) {
        out << format_coord_line("TX", rec.target.coords(i, 0), rec.target.coords(i, 1),
                                 rec.target.coords(i, 2))
            << "\n";
    }
    out << "B " << rec.binder.seq << "\n";
    for (int i = 0; i < rec.binder.coords.rows(); ++i) {
        out << format_coord_line("BX", rec.binder.coords(i, 0), rec.binder.coords(i, 1),
                                 rec.binder.coords(i, 2))
            << "\n";
    }
}

void write_records(std::ostream& out, const std::vector<ComplexRecord>& recs) {
    for (const auto& r : recs) write_record(out, r);
}

std::vector<ComplexRecord> read_records(std::istream& in) {
    std::vector<ComplexRecord> out;
    ComplexRecord cur;
    std::vector<Eigen::Vector3d> tx;
    std::vector<Eigen::Vector3d> bx;
    bool open = false;
    long line_no = 0;

    auto flush = [&]() {
        if (!open) return;
        cur.target.coords.resize(static_cast<Eigen::Index>(tx.size()), 3);
        for (size_t i = 0; i < tx.size(); ++i) cur.target.coords.row(static_cast<Eigen::Index>(i)) = tx[i];
        cur.binder.coords.resize(static_cast<Eigen::Index>(bx.size()), 3);
        for (size_t i = 0; i < bx.size(); ++i) cur.binder.coords.row(static_cast<Eigen::Index>(i)) = bx[i];
        cur.validate();
        out.push_back(std::move(cur));
        cur = ComplexRecord{};
        tx.clear();
        bx.clear();
        open = false;
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("#complex ", 0) == 0) {
            flush();
            cur.id = line.substr(9);
            open = true;
            continue;
        }
        if (line.rfind("#meta", 0) == 0 || line[0] == '#') continue;
        if (!open) throw ParseError("record line before #complex header", line_no);
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "T" || tag == "B") {
            std::string seq;
            ls >> seq;
            (tag == "T" ? cur.target.seq : cur.binder.seq) = seq;
        } else if (tag == "TX" || tag == "BX") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw ParseError("malformed coordinate line", line_no);
            (tag == "TX" ? tx : bx).emplace_back(x, y, z);
        } else {
            throw ParseError("unknown record tag '" + tag + "'", line_no);
        }
    }
    flush();
    return out;
}

void save_records(const std::string& path, const std::vector<ComplexRecord>& recs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_records(out, recs);
    if (!out.good()) throw IoError("write failed: " + path);
}

std::vector<ComplexRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    return read_records(in);
}

}  // namespace ppdesign
