#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cimcs/datagen.hpp"
#include "cimcs/io.hpp"

using namespace cimcs;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "cimcs_io_test";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("formatted doubles survive a round trip bitwise") {
    const double vals[] = {0.0,   -0.0,       1.0 / 3.0, 1e-300,    -2.5e300,
                           0.125, 0.39215686, 6.02e23,   -1.0 / 7.0};
    for (double v : vals) {
        const std::string s = format_double(v);
        double back = 0.0;
        std::sscanf(s.c_str(), "%lf", &back);
        CHECK(std::memcmp(&back, &v, sizeof v) == 0);
    }
}

TEST_CASE("hash matches published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
    CHECK(hex64(0ULL) == "0000000000000000");
}

TEST_CASE("csv writer emits comments then header then rows") {
    const fs::path p = temp_dir() / "basic.csv";
    {
        CsvWriter w(p, {"alg test", "note two"}, {"x", "y", "label"});
        w.row({CsvWriter::cell(0.5), CsvWriter::cell(3), "abc"});
        w.row({CsvWriter::cell(-1.25), CsvWriter::cell(std::uint64_t{1} << 40), "def"});
    }
    std::istringstream in(slurp(p));
    std::string line;
    std::getline(in, line);
    CHECK(line == "# alg test");
    std::getline(in, line);
    CHECK(line == "# note two");
    std::getline(in, line);
    CHECK(line == "x,y,label");
    std::getline(in, line);
    CHECK(line == format_double(0.5) + ",3,abc");
    std::getline(in, line);
    CHECK(line == format_double(-1.25) + ",1099511627776,def");
    CHECK(!std::getline(in, line));
}

TEST_CASE("csv writer rejects rows with the wrong arity") {
    const fs::path p = temp_dir() / "arity.csv";
    CsvWriter w(p, {}, {"a", "b"});
    CHECK_THROWS_AS(w.row({"1"}), input_error);
    CHECK_THROWS_AS(w.row({"1", "2", "3"}), input_error);
}

TEST_CASE("pgm round trip quantizes to half a level") {
    const int h = 9, w = 13;
    MatrixXd img(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) img(i, j) = (i * w + j) / double(h * w - 1);
    img(0, 0) = 0.0;
    img(h - 1, w - 1) = 1.0;

    const fs::path p = temp_dir() / "grad.pgm";
    write_pgm(img, p);
    const MatrixXd back = read_pgm(p);
    REQUIRE(back.rows() == h);
    REQUIRE(back.cols() == w);
    CHECK((back - img).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("pgm reader accepts ascii variant and clamps writes") {
    const fs::path p = temp_dir() / "ascii.pgm";
    {
        std::ofstream out(p);
        out << "P2\n# a comment\n3 2\n255\n0 128 255\n64 32 16\n";
    }
    const MatrixXd img = read_pgm(p);
    REQUIRE(img.rows() == 2);
    REQUIRE(img.cols() == 3);
    CHECK(img(0, 0) == 0.0);
    CHECK(img(0, 2) == 1.0);
    CHECK(img(1, 0) == doctest::Approx(64.0 / 255.0));

    MatrixXd wild(1, 3);
    wild << -0.5, 0.5, 1.5;
    const fs::path q = temp_dir() / "clamp.pgm";
    write_pgm(wild, q);
    const MatrixXd back = read_pgm(q);
    CHECK(back(0, 0) == 0.0);
    CHECK(back(0, 2) == 1.0);
}

TEST_CASE("instance bundles round trip exactly") {
    const fs::path dir = temp_dir() / "bundle_truth";
    const ProblemInstance inst = gen_instance(17, 0.7, 0.3, 0.2, 12345);
    save_instance(inst, dir);
    const ProblemInstance back = load_instance(dir);

    CHECK(back.A == inst.A);
    CHECK(back.y == inst.y);
    REQUIRE(back.has_truth());
    CHECK(back.x_true == inst.x_true);
    CHECK(back.xi_true == inst.xi_true);
    CHECK(back.nu == inst.nu);
    CHECK(back.seed == inst.seed);
    CHECK(back.a == inst.a);
    CHECK(back.alpha == inst.alpha);
}

TEST_CASE("instance bundles round trip without ground truth") {
    const fs::path dir = temp_dir() / "bundle_blind";
    ProblemInstance inst = gen_instance(9, 0.6, 0.2, 0.0, 3);
    inst.x_true.resize(0);
    inst.xi_true.resize(0);
    save_instance(inst, dir);
    const ProblemInstance back = load_instance(dir);
    CHECK(back.A == inst.A);
    CHECK(back.y == inst.y);
    CHECK(!back.has_truth());
}

TEST_CASE("loading a missing bundle reports an error") {
    CHECK_THROWS_AS(load_instance(temp_dir() / "nope"), input_error);
}
