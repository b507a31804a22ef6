#include "planerect/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "planerect/error.hpp"

namespace planerect {

using nlohmann::json;

namespace {

json point(const Eigen::Vector2d &p) { return json::array({p.x(), p.y()}); }

Eigen::Vector2d read_point(const json &j) {
    if (!j.is_array() || j.size() != 2) {
        throw Error(ErrorKind::Parse, "expected an [x, y] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) {
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

int parse_int(const std::string &s) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw Error(ErrorKind::Parse, "bad integer '" + s + "'");
    }
    return v;
}

} // namespace

std::string scene_to_json(const GroundTruthScene &s) {
    json j;
    j["imageSize"] = {{"width", s.width}, {"height", s.height}};
    j["normalizer"] = {{"center", point(s.normalizer.center())}, {"scale", s.normalizer.scale()}};
    j["lambdaGT"] = s.lambdaGT;
    j["vlineGT"] = {s.vlineGT.l1, s.vlineGT.l2, s.vlineGT.l3};
    json h = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            h.push_back(s.planeToImage(r, c));
        }
    }
    j["planeToImage"] = h;
    j["motion"] = std::string(to_string(s.motion));
    j["planeCenter"] = point(s.planeCenter);
    j["planeHalfExtent"] = s.planeHalfExtent;
    json groups = json::array();
    for (const auto &g : s.frames) {
        json jg = json::array();
        for (const auto &f : g) {
            jg.push_back({point(f.py), point(f.po), point(f.px)});
        }
        groups.push_back(jg);
    }
    j["frames"] = groups;
    j["seed"] = s.seed;
    j["noiseSigma"] = s.noiseSigmaPx;
    return j.dump(1);
}

GroundTruthScene scene_from_json(const std::string &text) {
    try {
        const json j = json::parse(text);
        GroundTruthScene s;
        s.width = j.at("imageSize").at("width").get<int>();
        s.height = j.at("imageSize").at("height").get<int>();
        s.normalizer = Normalizer(read_point(j.at("normalizer").at("center")),
                                  j.at("normalizer").at("scale").get<double>());
        s.lambdaGT = j.at("lambdaGT").get<double>();
        const auto &l = j.at("vlineGT");
        if (l.size() != 3) {
            throw Error(ErrorKind::Parse, "vlineGT needs 3 coefficients");
        }
        s.vlineGT = {l[0].get<double>(), l[1].get<double>(), l[2].get<double>()};
        const auto &h = j.at("planeToImage");
        if (h.size() != 9) {
            throw Error(ErrorKind::Parse, "planeToImage needs 9 entries");
        }
        for (int k = 0; k < 9; ++k) {
            s.planeToImage(k / 3, k % 3) = h[k].get<double>();
        }
        s.motion = parse_motion(j.at("motion").get<std::string>());
        s.planeCenter = read_point(j.at("planeCenter"));
        s.planeHalfExtent = j.at("planeHalfExtent").get<double>();
        for (const auto &jg : j.at("frames")) {
            std::vector<AffineFrame> g;
            for (const auto &jf : jg) {
                if (jf.size() != 3) {
                    throw Error(ErrorKind::Parse, "a frame has exactly 3 points");
                }
                g.push_back({read_point(jf[0]), read_point(jf[1]), read_point(jf[2])});
            }
            s.frames.push_back(std::move(g));
        }
        s.seed = j.at("seed").get<std::uint64_t>();
        s.noiseSigmaPx = j.at("noiseSigma").get<double>();
        return s;
    } catch (const json::exception &e) {
        throw Error(ErrorKind::Parse, std::string("scene document: ") + e.what());
    } catch (const Error &e) {
        if (e.kind() == ErrorKind::Parse) {
            throw;
        }
        throw Error(ErrorKind::Parse, std::string("scene document: ") + e.what());
    }
}

void save_scene(const GroundTruthScene &scene, const std::filesystem::path &path) {
    std::ofstream os(path);
    if (!os) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    os << scene_to_json(scene) << '\n';
    if (!os) {
        throw Error(ErrorKind::Io, "write failed for " + path.string());
    }
}

GroundTruthScene load_scene(const std::filesystem::path &path) {
    std::ifstream is(path);
    if (!is) {
        throw Error(ErrorKind::Io, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return scene_from_json(ss.str());
}

std::string model_to_json(const RectifyModel &m, const EstimationResult *est) {
    json j;
    j["l"] = {m.l.l1, m.l.l2, m.l.l3};
    j["lambda"] = m.lambda;
    if (est) {
        j["consensusSize"] = est->consensusSize;
        j["samplesTried"] = est->samplesTried;
        j["bestScore"] = est->bestScore;
        j["refined"] = est->refined;
        j["inlierPairFraction"] = est->inlierPairFraction;
        json flags = json::array();
        for (auto f : est->flags) {
            flags.push_back(std::string(to_string(f)));
        }
        j["flags"] = flags;
    }
    return j.dump(1);
}

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

double parse_double(const std::string &s) {
    if (s == "nan") {
        return std::nan("");
    }
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw Error(ErrorKind::Parse, "bad number '" + s + "'");
    }
    return v;
}

std::string result_header() {
    return "trial,variant,sigma,lambdaGT,lambdaEst,l1,l2,rmsWarp,relLambdaErr,nReal,nFeasible,solveMillis,residual";
}

std::string format_row(const ResultRow &r) {
    std::string s = std::to_string(r.trial) + ',' + r.variant;
    for (double v : {r.sigma, r.lambdaGT, r.lambdaEst, r.l1, r.l2, r.rmsWarp, r.relLambdaErr}) {
        s += ',' + format_double(v);
    }
    s += ',' + std::to_string(r.nReal) + ',' + std::to_string(r.nFeasible);
    s += ',' + format_double(r.solveMillis) + ',' + format_double(r.residual);
    return s;
}

void write_results(std::ostream &os, const std::vector<ResultRow> &rows) {
    os << result_header() << '\n';
    for (const auto &r : rows) {
        os << format_row(r) << '\n';
    }
}

std::vector<ResultRow> read_results(std::istream &is) {
    std::string line;
    if (!std::getline(is, line) || line != result_header()) {
        throw Error(ErrorKind::Parse, "missing result table header");
    }
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 13) {
            throw Error(ErrorKind::Parse, "result row has " + std::to_string(f.size()) + " fields");
        }
        ResultRow r;
        r.trial = parse_int(f[0]);
        r.variant = f[1];
        r.sigma = parse_double(f[2]);
        r.lambdaGT = parse_double(f[3]);
        r.lambdaEst = parse_double(f[4]);
        r.l1 = parse_double(f[5]);
        r.l2 = parse_double(f[6]);
        r.rmsWarp = parse_double(f[7]);
        r.relLambdaErr = parse_double(f[8]);
        r.nReal = parse_int(f[9]);
        r.nFeasible = parse_int(f[10]);
        r.solveMillis = parse_double(f[11]);
        r.residual = parse_double(f[12]);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace planerect
