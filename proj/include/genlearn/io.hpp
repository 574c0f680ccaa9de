#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "genlearn/autoregressive.hpp"
#include "genlearn/matrix.hpp"

namespace genlearn {

/// Shortest round-trip decimal form; keeps metric files byte-stable.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write-to-temp plus rename, so failed runs never leave partial outputs.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

/// FNV-1a 64 over the raw bytes, hex-encoded; the manifest checksum.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    DenseMatrix values;
};

inline std::string to_csv(const std::vector<std::string>& header, const DenseMatrix& values) {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        out += header[j];
        out += (j + 1 < header.size()) ? ',' : '\n';
    }
    for (std::size_t i = 0; i < values.rows(); ++i)
        for (std::size_t j = 0; j < values.cols(); ++j) {
            out += format_double(values(i, j));
            out += (j + 1 < values.cols()) ? ',' : '\n';
        }
    return out;
}

inline CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("CSV: empty file");
    {
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) t.header.push_back(cell);
    }
    std::vector<Vec> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        Vec row;
        while (std::getline(ls, cell, ',')) {
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc())
                throw std::invalid_argument("CSV: bad numeric cell '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != t.header.size())
            throw std::invalid_argument("CSV: ragged row");
        rows.push_back(std::move(row));
    }
    t.values = DenseMatrix::from_rows(rows);
    return t;
}

inline std::string to_sequence_text(const SequenceDataset& ds) {
    std::string out;
    for (const auto& seq : ds.sequences) {
        for (std::size_t k = 0; k < seq.size(); ++k) {
            out += std::to_string(seq[k]);
            if (k + 1 < seq.size()) out += ' ';
        }
        out += '\n';
    }
    return out;
}

/// One sequence per line, space-separated integer symbols. vocab = 0 infers
/// the alphabet size as max symbol + 1.
inline SequenceDataset parse_sequences(const std::string& text, std::size_t vocab = 0) {
    SequenceDataset ds{{}, vocab};
    std::istringstream in(text);
    std::string line;
    int max_sym = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<int> seq;
        int s;
        while (ls >> s) {
            if (s < 0) throw std::invalid_argument("sequence symbols must be non-negative");
            max_sym = std::max(max_sym, s);
            seq.push_back(s);
        }
        ds.sequences.push_back(std::move(seq));
    }
    if (ds.vocab == 0) ds.vocab = static_cast<std::size_t>(max_sym + 1);
    check_symbols(ds);
    return ds;
}

}  // namespace genlearn
