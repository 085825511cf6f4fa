#include "gridvolterra/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gridvolterra/errors.hpp"
#include "gridvolterra/version.hpp"

namespace gridvolterra {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("cannot open " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, const std::string& where) {
    std::string t;
    for (char c : cell)
        if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    bool ok = !t.empty();
    double v = 0.0;
    if (ok) {
        try {
            std::size_t used = 0;
            v = std::stod(t, &used);
            ok = used == t.size();
        } catch (const std::exception&) {
            ok = false;
        }
    }
    if (!ok) throw ParseError(where + ": bad number '" + cell + "'");
    return v;
}

// Shared CSV body reader: header already validated, num_cols includes t.
Eigen::MatrixXd read_rows(std::ifstream& in, const std::string& path, int num_cols,
                          std::vector<double>* timestamps) {
    std::vector<double> flat;
    std::string line;
    int lineno = 1;
    int rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        const std::string where = path + ":" + std::to_string(lineno);
        if (static_cast<int>(cells.size()) != num_cols)
            throw ParseError(where + ": expected " + std::to_string(num_cols) + " cells, got " +
                             std::to_string(cells.size()));
        const double t = parse_cell(cells[0], where);
        if (timestamps) timestamps->push_back(t);
        for (int c = 1; c < num_cols; ++c) {
            const double v = parse_cell(cells[static_cast<std::size_t>(c)], where);
            if (!std::isfinite(v)) throw NonFiniteInput(where);
            flat.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw ParseError(path + ": no data rows");
    const int width = num_cols - 1;
    Eigen::MatrixXd M(rows, width);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < width; ++c) M(r, c) = flat[static_cast<std::size_t>(r * width + c)];
    return M;
}

void expect_header(const std::vector<std::string>& header, const std::vector<std::string>& want,
                   const std::string& path) {
    if (header != want) {
        std::string msg = path + ": bad header, expected ";
        for (std::size_t i = 0; i < want.size() && i < 4; ++i) {
            if (i) msg += ",";
            msg += want[i];
        }
        if (want.size() > 4) msg += ",...";
        throw ParseError(msg);
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in = open_input(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out = open_output(path);
    out << j.dump(2) << "\n";
    if (!out) throw Error("failed writing " + path);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json grid_to_json(const RadialGrid& grid) {
    json lines = json::array();
    for (const Line& ln : grid.lines())
        lines.push_back({{"child", ln.child}, {"parent", ln.parent}, {"r", ln.r}, {"x", ln.x}});
    return json{{"version", kVersion}, {"buses", grid.num_buses()}, {"lines", lines}};
}

RadialGrid grid_from_json(const json& j) {
    try {
        const int buses = j.at("buses").get<int>();
        std::vector<Line> lines;
        for (const json& item : j.at("lines")) {
            Line ln;
            ln.child = item.at("child").get<BusId>();
            ln.parent = item.at("parent").get<BusId>();
            ln.r = item.at("r").get<double>();
            ln.x = item.at("x").get<double>();
            lines.push_back(ln);
        }
        if (static_cast<int>(lines.size()) != buses)
            throw ParseError("grid json: buses=" + std::to_string(buses) + " but " +
                             std::to_string(lines.size()) + " lines");
        return build_grid(lines);
    } catch (const json::exception& e) {
        throw ParseError(std::string("grid json: ") + e.what());
    }
}

void save_grid(const RadialGrid& grid, const std::string& path) {
    write_json_file(grid_to_json(grid), path);
}

RadialGrid load_grid(const std::string& path) { return grid_from_json(load_json_file(path)); }

void save_series(const VoltageSeries& series, const std::string& path) {
    if (!series.V.allFinite()) throw NonFiniteInput("voltage series");
    const Eigen::Index T = series.V.rows();
    const Eigen::Index N = series.V.cols();
    if (T < 1 || N < 1) throw DimensionMismatch("series must be non-empty");
    std::ofstream out = open_output(path);
    out << "t";
    for (Eigen::Index n = 1; n <= N; ++n) out << ",bus_" << n;
    out << "\n";
    const bool with_ts = static_cast<Eigen::Index>(series.timestamps.size()) == T;
    for (Eigen::Index t = 0; t < T; ++t) {
        out << format_double(with_ts ? series.timestamps[static_cast<std::size_t>(t)]
                                     : static_cast<double>(t));
        for (Eigen::Index n = 0; n < N; ++n) out << "," << format_double(series.V(t, n));
        out << "\n";
    }
    if (!out) throw Error("failed writing " + path);
}

VoltageSeries load_series(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    const auto header = split_line(line);
    if (header.size() < 2 || header[0] != "t")
        throw ParseError(path + ": header must be t,bus_1,...");
    std::vector<std::string> want{"t"};
    for (std::size_t i = 1; i < header.size(); ++i) want.push_back("bus_" + std::to_string(i));
    expect_header(header, want, path);

    VoltageSeries s;
    s.V = read_rows(in, path, static_cast<int>(header.size()), &s.timestamps);
    return s;
}

void save_profiles(const InjectionProfile& profile, const std::string& path) {
    if (!profile.p.allFinite() || !profile.q.allFinite()) throw NonFiniteInput("profiles");
    const Eigen::Index T = profile.p.rows();
    const Eigen::Index N = profile.p.cols();
    if (profile.q.rows() != T || profile.q.cols() != N)
        throw DimensionMismatch("p and q profiles must have the same shape");
    if (T < 1 || N < 1) throw DimensionMismatch("profiles must be non-empty");
    std::ofstream out = open_output(path);
    out << "t";
    for (Eigen::Index n = 1; n <= N; ++n) out << ",p_" << n;
    for (Eigen::Index n = 1; n <= N; ++n) out << ",q_" << n;
    out << "\n";
    for (Eigen::Index t = 0; t < T; ++t) {
        out << format_double(static_cast<double>(t));
        for (Eigen::Index n = 0; n < N; ++n) out << "," << format_double(profile.p(t, n));
        for (Eigen::Index n = 0; n < N; ++n) out << "," << format_double(profile.q(t, n));
        out << "\n";
    }
    if (!out) throw Error("failed writing " + path);
}

InjectionProfile load_profiles(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    const auto header = split_line(line);
    if (header.size() < 3 || header[0] != "t" || (header.size() - 1) % 2 != 0)
        throw ParseError(path + ": header must be t,p_1..p_N,q_1..q_N");
    const int N = static_cast<int>((header.size() - 1) / 2);
    std::vector<std::string> want{"t"};
    for (int i = 1; i <= N; ++i) want.push_back("p_" + std::to_string(i));
    for (int i = 1; i <= N; ++i) want.push_back("q_" + std::to_string(i));
    expect_header(header, want, path);

    const Eigen::MatrixXd both = read_rows(in, path, 2 * N + 1, nullptr);
    InjectionProfile prof;
    prof.p = both.leftCols(N);
    prof.q = both.rightCols(N);
    return prof;
}

json kernels_to_json(const std::vector<VolterraKernels>& kernels) {
    const int N = static_cast<int>(kernels.size());
    PairIndexer pairs(N);
    json blocks = json::array();
    for (const VolterraKernels& k : kernels) {
        json rho1 = json::array();
        for (Eigen::Index i = 0; i < k.rho1.size(); ++i) rho1.push_back(k.rho1[i]);
        json rho2 = json::array();
        for (BusId i = 1; i <= N; ++i) {
            for (BusId j = i; j <= N; ++j) {
                const double v = k.rho2[pairs.flat(i, j)];
                if (v != 0.0) rho2.push_back({{"i", i}, {"j", j}, {"value", v}});
            }
        }
        blocks.push_back({{"n", k.n}, {"rho1", rho1}, {"rho2", rho2}});
    }
    return json{{"version", kVersion}, {"buses", N}, {"kernels", blocks}};
}

std::vector<VolterraKernels> kernels_from_json(const json& j) {
    try {
        const int N = j.at("buses").get<int>();
        if (N < 1) throw ParseError("kernels json: buses must be >= 1");
        const json& blocks = j.at("kernels");
        if (static_cast<int>(blocks.size()) != N)
            throw ParseError("kernels json: expected one block per bus");
        PairIndexer pairs(N);
        std::vector<VolterraKernels> out;
        out.reserve(static_cast<std::size_t>(N));
        for (int b = 0; b < N; ++b) {
            const json& blk = blocks[static_cast<std::size_t>(b)];
            VolterraKernels k = zero_kernels(N, blk.at("n").get<BusId>());
            if (k.n != b + 1) throw ParseError("kernels json: blocks must be ordered by bus");
            const json& rho1 = blk.at("rho1");
            if (static_cast<int>(rho1.size()) != N)
                throw ParseError("kernels json: rho1 must have one entry per bus");
            for (int i = 0; i < N; ++i) {
                const double v = rho1[static_cast<std::size_t>(i)].get<double>();
                if (!std::isfinite(v)) throw ParseError("kernels json: non-finite rho1");
                k.rho1[i] = v;
            }
            for (const json& trip : blk.at("rho2")) {
                const BusId i = trip.at("i").get<BusId>();
                const BusId jj = trip.at("j").get<BusId>();
                if (i < 1 || i > N || jj < 1 || jj > N)
                    throw ParseError("kernels json: pair index outside 1..N");
                const double v = trip.at("value").get<double>();
                if (!std::isfinite(v)) throw ParseError("kernels json: non-finite rho2");
                k.rho2[pairs.flat(i, jj)] = v;
            }
            out.push_back(std::move(k));
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("kernels json: ") + e.what());
    }
}

void save_kernels(const std::vector<VolterraKernels>& kernels, const std::string& path) {
    write_json_file(kernels_to_json(kernels), path);
}

std::vector<VolterraKernels> load_kernels(const std::string& path) {
    return kernels_from_json(load_json_file(path));
}

json diagnostics_to_json(const IdentifyResult& result) {
    json buses = json::array();
    for (const BusSolution& s : result.solutions) {
        const BusId n = static_cast<BusId>(buses.size()) + 1;
        buses.push_back({{"n", n},
                         {"lambda", s.lambda},
                         {"mu", s.mu},
                         {"status", s.status == SolveStatus::Converged ? "converged" : "max_iter"},
                         {"iterations", s.iterations},
                         {"certificate", s.certificate},
                         {"grad_norm", s.grad_norm},
                         {"objective_first",
                          s.objective_trace.empty() ? 0.0 : s.objective_trace.front()},
                         {"objective_last",
                          s.objective_trace.empty() ? 0.0 : s.objective_trace.back()},
                         {"warning", s.warning}});
    }
    return json{{"version", kVersion},
                {"hierarchy_zeroed", result.hierarchy_zeroed},
                {"buses", buses}};
}

void save_roc_csv(const RocCurve& curve, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "threshold,fpr,tpr\n";
    for (const RocPoint& p : curve.points)
        out << format_double(p.threshold) << "," << format_double(p.fpr) << ","
            << format_double(p.tpr) << "\n";
    if (!out) throw Error("failed writing " + path);
}

void save_edge_scores_csv(const EdgeScores& scores, const std::string& path) {
    const int N = static_cast<int>(scores.S.rows());
    struct Row {
        BusId i, j;
        double score;
    };
    std::vector<Row> rows;
    rows.reserve(static_cast<std::size_t>(N) * (N - 1) / 2);
    for (BusId i = 1; i <= N; ++i)
        for (BusId j = i + 1; j <= N; ++j) rows.push_back({i, j, scores.S(i - 1, j - 1)});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.score > b.score; });
    std::ofstream out = open_output(path);
    out << "i,j,score\n";
    for (const Row& r : rows)
        out << r.i << "," << r.j << "," << format_double(r.score) << "\n";
    if (!out) throw Error("failed writing " + path);
}

void save_triad_scores_csv(const TriadScores& scores, const std::string& path) {
    struct Row {
        BusId n, i, j;
        double score;
    };
    std::vector<Row> rows;
    rows.reserve(scores.score.size());
    for (const auto& [key, v] : scores.score)
        rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.score > b.score; });
    std::ofstream out = open_output(path);
    out << "n,i,j,score\n";
    for (const Row& r : rows)
        out << r.n << "," << r.i << "," << r.j << "," << format_double(r.score) << "\n";
    if (!out) throw Error("failed writing " + path);
}

void save_report(const EvaluationReport& report, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
    const std::filesystem::path base(dir);

    json auc{{"version", kVersion}, {"edges", json::object()}, {"triads", json::object()}};
    for (const std::string& m : report.methods) {
        save_roc_csv(report.edge_roc.at(m), (base / ("roc_" + m + ".csv")).string());
        save_edge_scores_csv(report.edge_scores.at(m), (base / ("edges_" + m + ".csv")).string());
        auc["edges"][m] = report.edge_roc.at(m).auc;
    }
    const bool ran_volterra = std::find(report.methods.begin(), report.methods.end(),
                                        "volterra") != report.methods.end();
    if (ran_volterra) {
        save_kernels(report.identify.kernels, (base / "kernels.json").string());
        write_json_file(diagnostics_to_json(report.identify),
                        (base / "diagnostics.json").string());
        if (report.has_triads) {
            save_triad_scores_csv(report.triads, (base / "triads_volterra.csv").string());
            save_roc_csv(report.triad_roc, (base / "roc_triads_volterra.csv").string());
            auc["triads"]["volterra"] = report.triad_roc.auc;
        }
    }
    write_json_file(auc, (base / "auc.json").string());
}

json schema_json() {
    return json{
        {"version", kVersion},
        {"files",
         {{"grid",
           {{"type", "json"},
            {"fields",
             {{"buses", "int, number of non-substation buses N"},
              {"lines",
               "array of {child:int 1..N, parent:int 0..N, r:float>0, x:float>=0}, "
               "one per bus, forming a tree rooted at bus 0"}}}}},
          {"profiles",
           {{"type", "csv"},
            {"header", "t,p_1,...,p_N,q_1,...,q_N"},
            {"units", "per-unit net injections; consumption is negative"}}},
          {"series",
           {{"type", "csv"},
            {"header", "t,bus_1,...,bus_N"},
            {"units", "per-unit squared voltage magnitudes"}}},
          {"kernels",
           {{"type", "json"},
            {"fields",
             {{"buses", "int"},
              {"kernels",
               "array of {n:int, rho1:float[N], rho2:array of {i:int, j:int, value:float} "
               "(nonzero entries, i<=j)}"}}}}},
          {"report",
           {{"type", "directory"},
            {"contents",
             {"auc.json", "roc_<method>.csv", "edges_<method>.csv", "kernels.json",
              "diagnostics.json", "triads_volterra.csv", "roc_triads_volterra.csv"}}}}}},
        {"environment",
         {{"GRIDVOLTERRA_SEED", "integer fallback used when --seed is not given"}}},
        {"floats", "CSV floats carry 17 significant digits and round-trip exactly"}};
}

}  // namespace gridvolterra
