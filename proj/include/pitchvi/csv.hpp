#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pitchvi/errors.hpp"

namespace pitchvi::csv {

inline std::vector<std::string> split(std::string_view line, char delim = ',') {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

struct Reader {
    explicit Reader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw ValidationError("cannot open file: " + path);
        std::string line;
        if (!std::getline(in_, line)) throw ParseError(path + ": missing header", 1);
        for (auto& f : split(line)) header_.push_back(strip(f));
        line_no_ = 1;
    }

    const std::vector<std::string>& header() const { return header_; }

    int column(std::string_view name) const {
        for (size_t i = 0; i < header_.size(); ++i)
            if (header_[i] == name) return static_cast<int>(i);
        throw ValidationError(path_ + ": missing column '" + std::string(name) + "'");
    }

    int column_or(std::string_view name, int fallback) const {
        for (size_t i = 0; i < header_.size(); ++i)
            if (header_[i] == name) return static_cast<int>(i);
        return fallback;
    }

    // Returns false at EOF. Skips blank lines.
    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            std::string s = strip(line);
            if (s.empty()) continue;
            fields = split(s);
            if (fields.size() != header_.size())
                throw ParseError(path_ + ": expected " + std::to_string(header_.size()) +
                                     " fields, got " + std::to_string(fields.size()),
                                 line_no_);
            return true;
        }
        return false;
    }

    long line_no() const { return line_no_; }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ifstream in_;
    std::vector<std::string> header_;
    long line_no_ = 0;
};

inline long long to_ll(const std::string& s, const std::string& what, long line) {
    try {
        size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad integer for " + what + ": '" + s + "'", line);
    }
}

inline double to_double(const std::string& s, const std::string& what, long line) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad number for " + what + ": '" + s + "'", line);
    }
}

// Shortest round-trip decimal form of a double.
inline std::string fmt(double v) {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.17g", v);
    double back = std::strtod(buf, nullptr);
    for (int prec = 1; prec <= 16; ++prec) {
        char probe[32];
        snprintf(probe, sizeof(probe), "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == back) return probe;
    }
    return buf;
}

struct Writer {
    explicit Writer(const std::string& path) : out_(path) {
        if (!out_) throw ValidationError("cannot open file for writing: " + path);
        out_.precision(17);
    }
    void row(const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }
    std::ofstream out_;
};

}  // namespace pitchvi::csv
