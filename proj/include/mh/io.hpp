#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mh/grid.hpp"
#include "mh/varifold.hpp"

namespace mh::io {

using json = nlohmann::ordered_json;

inline json vec_json(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

inline Vec vec_from(const json& a) {
    Vec v;
    for (const auto& x : a) v.push_back(x.get<double>());
    return v;
}

// ---------------------------------------------------------------------------
// Field serialization: <base>.json header + <base>.bin flat float64 array in
// node order (last axis fastest), native little-endian.
// ---------------------------------------------------------------------------

inline json field_header(const ScalarField& f) {
    const Grid& g = f.grid();
    json head;
    head["dims"] = g.shape;
    head["spacing"] = vec_json(g.dx);
    head["corners"] = {{"lo", vec_json(g.lo)}, {"hi", vec_json(g.hi)}};
    head["policy"] = f.policy() == BoundaryPolicy::clamp ? "clamp" : "extrapolate-linear";
    head["count"] = g.count;
    return head;
}

inline std::string field_bytes(const ScalarField& f) {
    return std::string(reinterpret_cast<const char*>(f.data().data()),
                       f.data().size() * sizeof(double));
}

inline void save_field(const ScalarField& f, const std::string& base) {
    std::ofstream hj(base + ".json");
    require(hj.good(), errc::invalid_input, "cannot write field header " + base);
    hj << field_header(f).dump(2) << "\n";

    std::ofstream hb(base + ".bin", std::ios::binary);
    require(hb.good(), errc::invalid_input, "cannot write field data " + base);
    const std::string bytes = field_bytes(f);
    hb.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline ScalarField load_field(const std::string& base) {
    std::ifstream hj(base + ".json");
    require(hj.good(), errc::invalid_input, "cannot read field header " + base);
    json head = json::parse(hj);
    std::vector<int> dims = head.at("dims").get<std::vector<int>>();
    Vec lo = vec_from(head.at("corners").at("lo"));
    Vec hi = vec_from(head.at("corners").at("hi"));
    Grid g(static_cast<int>(dims.size()), lo, hi, dims);
    BoundaryPolicy pol = head.at("policy").get<std::string>() == "clamp"
                             ? BoundaryPolicy::clamp
                             : BoundaryPolicy::extrapolate_linear;
    std::vector<double> values(g.count);
    std::ifstream hb(base + ".bin", std::ios::binary);
    require(hb.good(), errc::invalid_input, "cannot read field data " + base);
    hb.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    require(hb.gcount() == static_cast<std::streamsize>(values.size() * sizeof(double)),
            errc::invalid_input, "field data truncated");
    return ScalarField(std::move(g), std::move(values), pol);
}

// ---------------------------------------------------------------------------
// OFF-style meshes with a JSON sidecar for multiplicities and the boundary
// chain. Vertices carry ambient_dim coordinates ("nOFF d" header when d != 3).
// ---------------------------------------------------------------------------

inline void save_varifold(const DiscreteVarifold& v, const std::string& base) {
    std::ofstream off(base + ".off");
    require(off.good(), errc::invalid_input, "cannot write mesh " + base);
    const int n = v.ambient_dim();
    if (n == 3)
        off << "OFF\n";
    else
        off << "nOFF " << n << "\n";
    off << v.vertices().size() << " " << v.faces().size() << " 0\n";
    off.precision(17);
    for (const auto& p : v.vertices()) {
        for (int a = 0; a < n; ++a) off << (a ? " " : "") << p[static_cast<std::size_t>(a)];
        off << "\n";
    }
    for (const auto& f : v.faces()) {
        off << f.size();
        for (int i : f) off << " " << i;
        off << "\n";
    }

    json side;
    side["ambient_dim"] = v.ambient_dim();
    side["surface_dim"] = v.surface_dim();
    side["multiplicities"] = v.multiplicities();
    json chain = json::array();
    for (const auto& b : v.boundary_chain())
        chain.push_back({{"verts", b.verts}, {"weight", b.weight}});
    side["boundary"] = chain;
    std::ofstream sj(base + ".sidecar.json");
    require(sj.good(), errc::invalid_input, "cannot write sidecar " + base);
    sj << side.dump(2) << "\n";
}

inline DiscreteVarifold load_varifold(const std::string& base) {
    std::ifstream off(base + ".off");
    require(off.good(), errc::invalid_input, "cannot read mesh " + base);
    std::string tag;
    off >> tag;
    int n = 3;
    if (tag == "nOFF")
        off >> n;
    else
        require(tag == "OFF", errc::schema_error, "not an OFF file: " + base);
    std::size_t nv = 0, nf = 0, ne = 0;
    off >> nv >> nf >> ne;
    std::vector<Vec> verts(nv, Vec(static_cast<std::size_t>(n)));
    for (auto& p : verts)
        for (int a = 0; a < n; ++a) off >> p[static_cast<std::size_t>(a)];
    std::vector<std::vector<int>> faces(nf);
    for (auto& f : faces) {
        int cnt = 0;
        off >> cnt;
        f.resize(static_cast<std::size_t>(cnt));
        for (int& i : f) off >> i;
    }
    require(off.good() || off.eof(), errc::schema_error, "malformed OFF file: " + base);

    std::ifstream sj(base + ".sidecar.json");
    require(sj.good(), errc::invalid_input, "cannot read sidecar " + base);
    json side = json::parse(sj);
    std::vector<double> theta = side.at("multiplicities").get<std::vector<double>>();
    std::vector<BoundaryFacet> chain;
    for (const auto& b : side.at("boundary"))
        chain.push_back({b.at("verts").get<std::vector<int>>(), b.at("weight").get<double>()});
    int m = side.at("surface_dim").get<int>();
    return DiscreteVarifold(n, m, std::move(verts), std::move(faces), std::move(theta),
                            std::move(chain));
}

// ---------------------------------------------------------------------------
// CSV helpers.
// ---------------------------------------------------------------------------

inline std::string csv_line(const std::vector<double>& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ",";
        out += g17(row[i]);
    }
    out += "\n";
    return out;
}

}  // namespace mh::io
