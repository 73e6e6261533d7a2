#include "commands.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using fdakit::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const fs::path& p) {
    Table rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::size_t column(const Table& t, const std::string& name) {
    for (std::size_t j = 0; j < t.at(0).size(); ++j) {
        if (t[0][j] == name) return j;
    }
    ADD_FAILURE() << "missing column " << name;
    return 0;
}

// Minimal XML checker: balanced tags, quoted attributes, known entities, one root element.
bool well_formed_xml(const std::string& s, std::string& why) {
    std::vector<std::string> stack;
    int roots = 0;
    std::size_t i = 0;
    auto is_name = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' || c == '.'; };
    auto check_entities = [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            if (s[k] == '<') return false;
            if (s[k] != '&') continue;
            const auto semi = s.find(';', k);
            if (semi == std::string::npos || semi > e) return false;
            const std::string ent = s.substr(k + 1, semi - k - 1);
            if (ent != "amp" && ent != "lt" && ent != "gt" && ent != "quot" && ent != "apos" && ent.rfind('#', 0) != 0) return false;
        }
        return true;
    };
    while (i < s.size()) {
        if (s[i] != '<') {
            const auto next = s.find('<', i);
            const auto end = next == std::string::npos ? s.size() : next;
            const bool blank = s.find_first_not_of(" \t\r\n", i) >= end;
            if (!blank && stack.empty()) return why = "text outside root", false;
            if (!check_entities(i, end)) return why = "bad character data", false;
            i = end;
            continue;
        }
        if (s.compare(i, 5, "<?xml") == 0) {
            if (roots > 0 || !stack.empty()) return why = "late declaration", false;
            const auto e = s.find("?>", i);
            if (e == std::string::npos) return why = "open declaration", false;
            i = e + 2;
            continue;
        }
        if (s.compare(i, 4, "<!--") == 0) {
            const auto e = s.find("-->", i);
            if (e == std::string::npos) return why = "open comment", false;
            i = e + 3;
            continue;
        }
        const bool closing = i + 1 < s.size() && s[i + 1] == '/';
        std::size_t k = i + (closing ? 2 : 1);
        const std::size_t name_start = k;
        while (k < s.size() && is_name(s[k])) ++k;
        const std::string name = s.substr(name_start, k - name_start);
        if (name.empty()) return why = "empty tag name", false;
        if (closing) {
            while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
            if (k >= s.size() || s[k] != '>') return why = "bad closing tag", false;
            if (stack.empty() || stack.back() != name) return why = "mismatched </" + name + ">", false;
            stack.pop_back();
            i = k + 1;
            continue;
        }
        std::map<std::string, int> seen;
        bool self_close = false;
        for (;;) {
            while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
            if (k >= s.size()) return why = "unterminated tag", false;
            if (s[k] == '>') break;
            if (s.compare(k, 2, "/>") == 0) {
                self_close = true;
                ++k;
                break;
            }
            const std::size_t a = k;
            while (k < s.size() && is_name(s[k])) ++k;
            const std::string attr = s.substr(a, k - a);
            if (attr.empty() || k >= s.size() || s[k] != '=') return why = "bad attribute in <" + name + ">", false;
            if (++seen[attr] > 1) return why = "duplicate attribute " + attr, false;
            ++k;
            if (k >= s.size() || (s[k] != '"' && s[k] != '\'')) return why = "unquoted attribute " + attr, false;
            const auto close = s.find(s[k], k + 1);
            if (close == std::string::npos) return why = "unterminated attribute", false;
            if (!check_entities(k + 1, close)) return why = "bad attribute value", false;
            k = close + 1;
        }
        if (stack.empty()) {
            if (++roots > 1) return why = "second root element", false;
        }
        if (!self_close) stack.push_back(name);
        i = k + 1;
    }
    if (!stack.empty()) return why = "unclosed <" + stack.back() + ">", false;
    if (roots != 1) return why = "no root element", false;
    return true;
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root_ = fs::temp_directory_path() / ("fdakit_cli_" + std::to_string(::getpid()) + "_" + info->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    std::string path(const std::string& rel) const { return (root_ / rel).string(); }

    void synth(int n, const std::string& out = "data") {
        const Result r = call({"synth", "--n-auctions", std::to_string(n), "--seed", "11", "--out", path(out)});
        ASSERT_EQ(r.code, 0) << r.err;
    }

    void smooth(const std::vector<std::string>& extra, const std::string& data = "data", const std::string& out = "fit") {
        std::vector<std::string> a{"smooth", "--bids", path(data + "/bids.csv"), "--attributes",
                                   path(data + "/attributes.csv"), "--out", path(out)};
        a.insert(a.end(), extra.begin(), extra.end());
        const Result r = call(a);
        ASSERT_EQ(r.code, 0) << r.err;
    }

    fs::path root_;
};

int count(const std::string& text, const std::string& needle) {
    int n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

}  // namespace

TEST(XmlChecker, AcceptsAndRejects) {
    std::string why;
    EXPECT_TRUE(well_formed_xml("<?xml version=\"1.0\"?>\n<svg a=\"1\"><g><line x=\"2\"/></g><text>a &amp; b</text></svg>\n", why));
    EXPECT_FALSE(well_formed_xml("<svg></svg><svg/>", why));
    EXPECT_FALSE(well_formed_xml("<svg><g></svg>", why));
    EXPECT_FALSE(well_formed_xml("<svg a=1/>", why));
    EXPECT_FALSE(well_formed_xml("<svg>a & b</svg>", why));
    EXPECT_FALSE(well_formed_xml("", why));
}

TEST_F(CliTest, UsageErrorsExitOne) {
    EXPECT_EQ(call({}).code, 1);
    EXPECT_EQ(call({"bogus"}).code, 1);
    const Result r = call({"synth", "--n-auctions", "abc", "--out", path("x")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--n-auctions"), std::string::npos) << r.err;
    EXPECT_EQ(call({"synth", "--out", path("x"), "--duration", "-1"}).code, 1);
    EXPECT_EQ(call({"smooth", "--bids", "a"}).code, 1);
    EXPECT_EQ(call({"synth", "--help"}).code, 0);
}

TEST_F(CliTest, MissingInputsExitTwo) {
    EXPECT_EQ(call({"smooth", "--bids", path("none.csv"), "--attributes", path("none2.csv"), "--out", path("o")}).code, 2);
    EXPECT_EQ(call({"riverplot", "--smooth-dir", path("nothing"), "--out", path("o")}).code, 2);
    EXPECT_EQ(call({"energy", "--smooth-dir", path("nothing"), "--out", path("o")}).code, 2);
}

TEST_F(CliTest, MalformedDataExitsTwo) {
    synth(3);
    {
        std::ofstream b(path("data/bids.csv"), std::ios::app);
        b << "A0001,1,not_a_number\n";
    }
    const Result r = call({"smooth", "--bids", path("data/bids.csv"), "--attributes", path("data/attributes.csv"), "--out",
                           path("fit")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("amount"), std::string::npos) << r.err;
}

TEST_F(CliTest, FitFailureExitsThree) {
    synth(4);
    // 12 unpenalized coefficients on 5 grid samples cannot be identified
    const Result r = call({"smooth", "--bids", path("data/bids.csv"), "--attributes", path("data/attributes.csv"), "--out",
                           path("fit"), "--grid", "5", "--lambda", "0"});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("failed"), std::string::npos);
    const Table diag = read_csv(path("fit/diagnostics.csv"));
    ASSERT_EQ(diag.size(), 5u);
    for (std::size_t i = 1; i < diag.size(); ++i) EXPECT_EQ(diag[i][column(diag, "status")], "failed");
}

TEST_F(CliTest, ProcessExitCodes) {
    const std::string exe = FDAKIT_EXE;
    auto status = [&](const std::string& args) {
        const int raw = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("synth --n-auctions 2 --out " + path("p")), 0);
    EXPECT_EQ(status("synth --n-auctions nope --out " + path("p")), 1);
    EXPECT_EQ(status("riverplot --smooth-dir " + path("missing") + " --out " + path("q")), 2);
}

TEST_F(CliTest, EmptySynthWritesHeaders) {
    synth(0);
    EXPECT_EQ(slurp(path("data/bids.csv")), "auction_id,time_days,amount\n");
    const Table attrs = read_csv(path("data/attributes.csv"));
    ASSERT_EQ(attrs.size(), 1u);
    EXPECT_EQ(attrs[0][0], "auction_id");
    EXPECT_TRUE(fs::exists(path("data/manifest.txt")));
}

TEST_F(CliTest, SynthIsByteIdentical) {
    synth(20, "a");
    synth(20, "b");
    EXPECT_EQ(slurp(path("a/bids.csv")), slurp(path("b/bids.csv")));
    EXPECT_EQ(slurp(path("a/attributes.csv")), slurp(path("b/attributes.csv")));
}

TEST_F(CliTest, SmoothRerunIsByteIdentical) {
    synth(15);
    smooth({}, "data", "fit");
    std::map<std::string, std::string> first;
    for (const auto& e : fs::directory_iterator(path("fit"))) first[e.path().filename().string()] = slurp(e.path());
    smooth({}, "data", "fit");
    for (const auto& [name, bytes] : first) EXPECT_EQ(slurp(root_ / "fit" / name), bytes) << name;
}

TEST_F(CliTest, ThirtyFourCurveOverlay) {
    synth(34);
    smooth({});
    const std::string svg = slurp(path("fit/curves.svg"));
    std::string why;
    EXPECT_TRUE(well_formed_xml(svg, why)) << why;
    EXPECT_EQ(count(svg, "<polyline"), 34);
    EXPECT_NE(svg.find("viewBox=\"0 0 800 500\""), std::string::npos);
    const Table coef = read_csv(path("fit/coefficients.csv"));
    EXPECT_EQ(coef.size(), 35u);
    const Table diag = read_csv(path("fit/diagnostics.csv"));
    for (std::size_t i = 1; i < diag.size(); ++i) {
        EXPECT_EQ(diag[i][column(diag, "status")], "ok");
        EXPECT_NE(diag[i][column(diag, "lambda")], "NA");
        EXPECT_NE(diag[i][column(diag, "df")], "NA");
        EXPECT_NE(diag[i][column(diag, "sse")], "NA");
    }
    const std::string manifest = slurp(path("fit/manifest.txt"));
    EXPECT_NE(manifest.find("n_basis=12"), std::string::npos);
    EXPECT_NE(manifest.find("grid=101"), std::string::npos);
}

TEST_F(CliTest, MonotoneCurvesNonDecreasing) {
    synth(25);
    smooth({"--method", "monotone"});
    const Table fitted = read_csv(path("fit/fitted_curves.csv"));
    const std::size_t id = column(fitted, "auction_id");
    const std::size_t v = column(fitted, "value");
    for (std::size_t i = 2; i < fitted.size(); ++i) {
        if (fitted[i][id] != fitted[i - 1][id]) continue;
        EXPECT_GE(std::stod(fitted[i][v]), std::stod(fitted[i - 1][v]) - 1e-9) << fitted[i][id];
    }
}

TEST_F(CliTest, AnalysesProduceContractOutputs) {
    synth(40);
    smooth({"--method", "monotone"});
    const std::string fit = path("fit");
    const std::string attrs = path("data/attributes.csv");
    ASSERT_EQ(call({"riverplot", "--smooth-dir", fit, "--out", path("river")}).code, 0);
    ASSERT_EQ(call({"fpca", "--smooth-dir", fit, "--out", path("fpca")}).code, 0);
    ASSERT_EQ(call({"cluster", "--smooth-dir", fit, "--attributes", attrs, "--out", path("cluster")}).code, 0);
    ASSERT_EQ(call({"regress", "--smooth-dir", fit, "--attributes", attrs, "--out", path("regress")}).code, 0);
    ASSERT_EQ(call({"pda", "--smooth-dir", fit, "--out", path("pda")}).code, 0);
    ASSERT_EQ(call({"energy", "--smooth-dir", fit, "--out", path("energy")}).code, 0);

    const Table frac = read_csv(path("fpca/fpca_fractions.csv"));
    double total = 0.0;
    for (std::size_t i = 1; i < frac.size(); ++i) total += std::stod(frac[i][column(frac, "fraction")]);
    EXPECT_LE(total, 1.0 + 1e-10);
    EXPECT_GT(total, 0.0);

    const Table reg = read_csv(path("regress/regression.csv"));
    ASSERT_GT(reg.size(), 1u);
    const auto b = column(reg, "beta"), lo = column(reg, "lo"), hi = column(reg, "hi");
    for (std::size_t i = 1; i < reg.size(); ++i) {
        EXPECT_LE(std::stod(reg[i][lo]), std::stod(reg[i][b]));
        EXPECT_LE(std::stod(reg[i][b]), std::stod(reg[i][hi]));
    }

    const Table assign = read_csv(path("cluster/cluster_assignments.csv"));
    EXPECT_EQ(assign.size(), 41u);

    for (const char* dir : {"fit", "river", "fpca", "cluster", "regress", "pda", "energy"}) {
        EXPECT_TRUE(fs::exists(root_ / dir / "manifest.txt")) << dir;
        for (const auto& e : fs::directory_iterator(root_ / dir)) {
            if (e.path().extension() != ".svg") continue;
            std::string why;
            EXPECT_TRUE(well_formed_xml(slurp(e.path()), why)) << e.path() << ": " << why;
        }
    }
}

TEST_F(CliTest, ConstantPriceEnergyIsZero) {
    fs::create_directories(path("flat"));
    {
        std::ofstream b(path("flat/bids.csv"));
        b << "auction_id,time_days,amount\n";
        std::ofstream a(path("flat/attributes.csv"));
        a << "auction_id,duration_days,opening_bid,seller_rating\nf1,7,10,5\nf2,3,25,9\n";
    }
    smooth({"--lambda", "1e-4"}, "flat", "fit");
    ASSERT_EQ(call({"energy", "--smooth-dir", path("fit"), "--out", path("energy")}).code, 0);
    const Table e = read_csv(path("energy/energy.csv"));
    ASSERT_EQ(e.size(), 2u * 101u + 1u);
    const auto col = column(e, "energy");
    for (std::size_t i = 1; i < e.size(); ++i) EXPECT_NEAR(std::stod(e[i][col]), 0.0, 1e-12) << i;
}
