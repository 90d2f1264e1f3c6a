#include "maneuverlab/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "maneuverlab/error.hpp"

namespace mlab {

namespace {

constexpr const char* kMagic = "maneuverlab-checkpoint";

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hex(const std::string& tok, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
        throw ParseError("checkpoint: bad value '" + tok + "'", line);
    }
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write checkpoint " + path.string());
    }
    out << kMagic << " 1\n";
    for (const auto& [k, v] : ckpt.meta) {
        if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw FormatError("checkpoint: metadata key/value must be single-line, key without spaces");
        }
        out << "meta " << k << ' ' << v << '\n';
    }
    for (const auto& [name, t] : ckpt.params.entries()) {
        out << "param " << name << ' ' << t.rank();
        for (auto d : t.shape()) {
            out << ' ' << d;
        }
        out << '\n';
        const auto data = t.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            out << (i ? " " : "") << hex(data[i]);
        }
        out << '\n';
    }
    if (!out) {
        throw Error("failed writing checkpoint " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint " + path.string());
    }
    Checkpoint ckpt;
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0) {
        throw FormatError("not a maneuverlab checkpoint: " + path.string());
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "meta") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') {
                value.erase(0, 1);
            }
            ckpt.meta[key] = value;
        } else if (kind == "param") {
            std::string name;
            std::size_t rank = 0;
            ls >> name >> rank;
            nd::Shape shape(rank);
            for (auto& d : shape) {
                ls >> d;
            }
            if (!ls) {
                throw ParseError("checkpoint: malformed param header", lineno);
            }
            std::string values_line;
            if (!std::getline(in, values_line)) {
                throw ParseError("checkpoint: missing values for " + name, lineno);
            }
            ++lineno;
            std::istringstream vs(values_line);
            std::vector<double> values;
            std::string tok;
            while (vs >> tok) {
                values.push_back(parse_hex(tok, lineno));
            }
            if (values.size() != nd::shape_numel(shape)) {
                throw ParseError("checkpoint: value count mismatch for " + name, lineno);
            }
            ckpt.params.add(name, nd::Tensor::from(std::move(shape), std::move(values), true));
        } else {
            throw ParseError("checkpoint: unknown record '" + kind + "'", lineno);
        }
    }
    return ckpt;
}

void assign_parameters(const ParameterSet& target, const ParameterSet& source) {
    for (const auto& [name, t] : target.entries()) {
        const nd::Tensor src = source.find(name);
        if (src.shape() != t.shape()) {
            throw DimensionError("checkpoint: shape mismatch for parameter " + name);
        }
        nd::Tensor dst = t;
        auto out = dst.mutable_data();
        std::copy(src.data().begin(), src.data().end(), out.begin());
    }
}

}  // namespace mlab
