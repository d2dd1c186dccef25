#include "tlalpan/io_util.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tlalpan {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for digest: " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string s = ss.str();
    return fnv1a64(s.data(), s.size());
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << content;
    }
    fs::rename(tmp, path);
}

std::string CsvTable::to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c)
        out += (c ? "," : "") + columns[c];
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c)
            out += (c ? "," : "") + format_double(r[c]);
        out += "\n";
    }
    return out;
}

std::string CsvTable::to_json() const {
    std::string out = "[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += i ? ",\n {" : "\n {";
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            out += (c ? "," : "") + std::string("\"") + columns[c] + "\":" + format_double(rows[i][c]);
        }
        out += "}";
    }
    out += "\n]\n";
    return out;
}

std::string CsvTable::to_plot() const {
    std::string out = "#";
    for (const auto& c : columns) out += " " + c;
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c)
            out += (c ? " " : "") + format_double(r[c]);
        out += "\n";
    }
    return out;
}

CsvTable CsvTable::from_csv_file(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot open csv: " + p.string());
    CsvTable t;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty csv: " + p.string());
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != t.columns.size())
            throw std::runtime_error("ragged csv row in " + p.string());
        t.rows.push_back(std::move(row));
    }
    return t;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw < 2 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned nt = std::min<std::size_t>(hw, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += nt) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace tlalpan
