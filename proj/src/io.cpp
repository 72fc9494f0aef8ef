#include "cimcs/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cimcs/rng.hpp"

namespace cimcs {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    // Try increasing precision until the value round-trips.
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    out << text;
    if (!out) throw input_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> parse_csv_numeric(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        const char* p = line.c_str();
        char* end = nullptr;
        while (*p) {
            double v = std::strtod(p, &end);
            if (end == p) break;
            row.push_back(v);
            p = end;
            while (*p == ',' || *p == ' ' || *p == '\t') ++p;
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void save_instance(const ProblemInstance& inst, const fs::path& dir) {
    fs::create_directories(dir);

    std::string a_text;
    for (int k = 0; k < inst.M(); ++k) {
        for (int r = 0; r < inst.N(); ++r) {
            if (r) a_text += ',';
            a_text += format_double(inst.A(k, r));
        }
        a_text += '\n';
    }
    write_text(dir / "A.csv", a_text);

    std::string y_text;
    for (int k = 0; k < inst.M(); ++k) {
        y_text += format_double(inst.y[k]);
        y_text += '\n';
    }
    write_text(dir / "y.csv", y_text);

    if (inst.has_truth()) {
        std::string t_text = "# x,xi\n";
        for (int r = 0; r < inst.N(); ++r) {
            t_text += format_double(inst.x_true[r]);
            t_text += ',';
            t_text += std::to_string(inst.xi_true[r]);
            t_text += '\n';
        }
        write_text(dir / "truth.csv", t_text);
    }

    json meta;
    meta["N"] = inst.N();
    meta["M"] = inst.M();
    meta["a"] = inst.a;
    meta["alpha"] = inst.alpha;
    meta["nu"] = inst.nu;
    meta["seed"] = inst.seed;
    meta["rng"] = kRngAlgorithm;
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

ProblemInstance load_instance(const fs::path& dir) {
    ProblemInstance inst;
    const json meta = json::parse(read_text(dir / "meta.json"));
    const int N = meta.at("N").get<int>();
    const int M = meta.at("M").get<int>();
    inst.a = meta.at("a").get<double>();
    inst.alpha = meta.at("alpha").get<double>();
    inst.nu = meta.at("nu").get<double>();
    inst.seed = meta.at("seed").get<std::uint64_t>();

    const auto a_rows = parse_csv_numeric(read_text(dir / "A.csv"));
    if (static_cast<int>(a_rows.size()) != M)
        throw input_error("A.csv row count does not match meta.json");
    inst.A.resize(M, N);
    for (int k = 0; k < M; ++k) {
        if (static_cast<int>(a_rows[k].size()) != N)
            throw input_error("A.csv column count does not match meta.json");
        for (int r = 0; r < N; ++r) inst.A(k, r) = a_rows[k][r];
    }

    const auto y_rows = parse_csv_numeric(read_text(dir / "y.csv"));
    if (static_cast<int>(y_rows.size()) != M) throw input_error("y.csv row count mismatch");
    inst.y.resize(M);
    for (int k = 0; k < M; ++k) inst.y[k] = y_rows[k][0];

    if (fs::exists(dir / "truth.csv")) {
        const auto t_rows = parse_csv_numeric(read_text(dir / "truth.csv"));
        if (static_cast<int>(t_rows.size()) != N) throw input_error("truth.csv row count mismatch");
        inst.x_true.resize(N);
        inst.xi_true.resize(N);
        for (int r = 0; r < N; ++r) {
            inst.x_true[r] = t_rows[r][0];
            inst.xi_true[r] = static_cast<int>(t_rows[r][1]);
        }
    }
    return inst;
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& comments,
                     const std::vector<std::string>& columns)
    : path_(path.string()), ncols_(columns.size()) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    for (const auto& c : comments) {
        buf_ += "# ";
        buf_ += c;
        buf_ += '\n';
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += columns[i];
    }
    buf_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != ncols_) throw input_error("CsvWriter: cell count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += cells[i];
    }
    buf_ += '\n';
}

CsvWriter::~CsvWriter() {
    try {
        write_text(path_, buf_);
    } catch (...) {
        // Destructor must not throw; a failed flush surfaces on read-back.
    }
}

MatrixXd read_pgm(const fs::path& path) {
    const std::string raw = read_text(path);
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < raw.size()) {
            if (std::isspace(static_cast<unsigned char>(raw[pos]))) { ++pos; continue; }
            if (raw[pos] == '#') {
                while (pos < raw.size() && raw[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        std::size_t start = pos;
        while (pos < raw.size() && !std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
        return raw.substr(start, pos - start);
    };

    const std::string magic = next_token();
    if (magic != "P5" && magic != "P2") throw input_error("not a P2/P5 graymap: " + path.string());
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw input_error("unsupported graymap geometry: " + path.string());

    MatrixXd img(h, w);
    if (magic == "P5") {
        ++pos;  // single whitespace after maxval
        if (raw.size() - pos < static_cast<std::size_t>(w) * h)
            throw input_error("truncated graymap: " + path.string());
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                img(i, j) = static_cast<unsigned char>(raw[pos++]) / static_cast<double>(maxval);
    } else {
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) img(i, j) = std::stoi(next_token()) / static_cast<double>(maxval);
    }
    return img;
}

void write_pgm(const MatrixXd& pixels, const fs::path& path) {
    const int h = static_cast<int>(pixels.rows());
    const int w = static_cast<int>(pixels.cols());
    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(w) * h);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double v = std::clamp(pixels(i, j), 0.0, 1.0);
            out += static_cast<char>(static_cast<int>(std::lround(v * 255.0)));
        }
    }
    write_text(path, out);
}

}  // namespace cimcs
