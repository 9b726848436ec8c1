#include "rte/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rte/errors.hpp"

namespace rte {

namespace {

// Second radiation constant h*c/k in m K.
constexpr double c2 = phys::planck_h * phys::light_c / phys::boltzmann_k;

// Gauss-Legendre nodes and weights on [-1, 1], order 4.
constexpr std::array<double, 4> gl_nodes{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                         0.8611363115940526};
constexpr std::array<double, 4> gl_weights{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                           0.3478548451374538};

constexpr double max_panel_width = 25.0;

bool strictly_increasing(const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), [](double a, double b) { return !(a < b); }) == v.end();
}

}  // namespace

BandGrid::BandGrid(double nu_min, double nu_max, double delta_nu)
    : nu_min_(nu_min), nu_max_(nu_max), delta_nu_(delta_nu), count_(0) {
    if (!(nu_min >= 0.0) || !(nu_min < nu_max) || !(delta_nu > 0.0)) {
        throw ConfigError("band grid requires 0 <= nu_min < nu_max and delta_nu > 0", "bands");
    }
    const double ratio = (nu_max - nu_min) / delta_nu;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError("(nu_max - nu_min) must be an integer multiple of delta_nu", "bands");
    }
    count_ = static_cast<std::size_t>(rounded);
}

void GasState::validate() const {
    if (!(temperature > 0.0)) throw DomainError("gas temperature must be positive");
    if (!(pressure > 0.0)) throw DomainError("gas pressure must be positive");
    if (x_co2 < 0.0 || x_h2o < 0.0 || x_co < 0.0) throw DomainError("mole fractions must be non-negative");
    if (x_co2 + x_h2o + x_co > 1.0 + 1e-12) throw DomainError("mole fractions sum above 1");
}

void SpeciesTable::validate() const {
    if (band_centers.empty() || ref_temperatures.empty()) {
        throw ConfigError("species table is empty", name);
    }
    if (!strictly_increasing(band_centers)) throw ConfigError("band centers must be strictly increasing", name);
    if (!strictly_increasing(ref_temperatures)) {
        throw ConfigError("reference temperatures must be strictly increasing", name);
    }
    if (k.size() != band_centers.size()) throw ConfigError("k must have one row per band", name);
    for (const auto& row : k) {
        if (row.size() != ref_temperatures.size()) {
            throw ConfigError("k rows must have one entry per reference temperature", name);
        }
        for (double v : row) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("k must be finite and non-negative", name);
        }
    }
}

double SpeciesTable::interpolate(std::size_t band, double temperature) const {
    const auto& row = k[band];
    const auto& ts = ref_temperatures;
    if (temperature <= ts.front()) return row.front();
    if (temperature >= ts.back()) return row.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), temperature);
    const auto hi = static_cast<std::size_t>(it - ts.begin());
    const auto lo = hi - 1;
    const double w = (temperature - ts[lo]) / (ts[hi] - ts[lo]);
    return row[lo] + w * (row[hi] - row[lo]);
}

AbsorptionTable::AbsorptionTable(std::vector<SpeciesTable> species) : species_(std::move(species)) {
    for (const auto& s : species_) s.validate();
}

const SpeciesTable* AbsorptionTable::find(std::string_view name) const noexcept {
    for (const auto& s : species_) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

void AbsorptionTable::check_grid(const BandGrid& grid) const {
    for (const auto& s : species_) {
        if (s.band_centers.size() != grid.size()) {
            throw ConfigError("table has " + std::to_string(s.band_centers.size()) + " bands, grid has " +
                                  std::to_string(grid.size()),
                              "absorption_table." + s.name);
        }
        for (std::size_t b = 0; b < grid.size(); ++b) {
            if (std::abs(s.band_centers[b] - grid.center(b)) > 1e-6 * std::max(1.0, grid.center(b))) {
                throw ConfigError("band center " + std::to_string(b) + " does not match the band grid",
                                  "absorption_table." + s.name);
            }
        }
    }
}

AbsorptionTable AbsorptionTable::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("absorption table is not valid JSON: ") + e.what());
    }
    if (!j.contains("species") || !j["species"].is_array()) {
        throw ConfigError("missing array", "species");
    }
    std::vector<SpeciesTable> species;
    for (std::size_t i = 0; i < j["species"].size(); ++i) {
        const auto& js = j["species"][i];
        const std::string where = "species[" + std::to_string(i) + "]";
        try {
            SpeciesTable s;
            s.name = js.at("name").get<std::string>();
            s.band_centers = js.at("band_centers_cm1").get<std::vector<double>>();
            s.ref_temperatures = js.at("ref_temperatures_K").get<std::vector<double>>();
            s.k = js.at("k_m1_atm1").get<std::vector<std::vector<double>>>();
            species.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(e.what(), where);
        }
    }
    return AbsorptionTable(std::move(species));
}

AbsorptionTable AbsorptionTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open absorption table " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string AbsorptionTable::to_json_text() const {
    nlohmann::json j;
    j["species"] = nlohmann::json::array();
    for (const auto& s : species_) {
        j["species"].push_back({{"name", s.name},
                                {"band_centers_cm1", s.band_centers},
                                {"ref_temperatures_K", s.ref_temperatures},
                                {"k_m1_atm1", s.k}});
    }
    return j.dump();
}

void AbsorptionTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write absorption table " + path.string());
    out << to_json_text() << '\n';
}

AbsorptionTable synthetic_absorption_table(const BandGrid& grid) {
    struct Peak {
        double center;    // cm^-1
        double width;     // cm^-1 at 300 K
        double strength;  // m^-1 atm^-1 at 300 K
    };
    struct Shape {
        const char* name;
        std::vector<Peak> peaks;
    };
    const std::vector<Shape> shapes{
        {"CO2", {{667.0, 60.0, 18.0}, {2349.0, 55.0, 45.0}, {3715.0, 70.0, 6.0}, {4980.0, 60.0, 0.4}}},
        {"H2O", {{250.0, 260.0, 9.0}, {1595.0, 160.0, 7.0}, {3756.0, 180.0, 5.0}, {5331.0, 150.0, 1.2},
                 {7250.0, 160.0, 0.6}}},
        {"CO", {{2143.0, 50.0, 25.0}, {4260.0, 45.0, 0.8}}},
    };
    const std::vector<double> temps{300.0, 600.0, 900.0, 1200.0, 1500.0, 1800.0, 2100.0, 2400.0, 2700.0};

    constexpr int samples_per_band = 8;
    std::vector<SpeciesTable> out;
    for (const auto& shape : shapes) {
        SpeciesTable s;
        s.name = shape.name;
        s.ref_temperatures = temps;
        for (std::size_t b = 0; b < grid.size(); ++b) {
            s.band_centers.push_back(grid.center(b));
            std::vector<double> row;
            for (double t : temps) {
                // Hot bands broaden the features and spread the line strength.
                const double broaden = std::sqrt(t / 300.0);
                double acc = 0.0;
                for (int q = 0; q < samples_per_band; ++q) {
                    const double nu = grid.lower(b) + (q + 0.5) * grid.delta_nu() / samples_per_band;
                    for (const auto& p : shape.peaks) {
                        const double w = p.width * broaden;
                        const double z = (nu - p.center) / w;
                        acc += p.strength / broaden * std::exp(-0.5 * z * z);
                    }
                }
                const double k = acc / samples_per_band;
                // Six significant digits keeps the data file compact and exact on reload.
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6g", k);
                row.push_back(std::strtod(buf, nullptr));
            }
            s.k.push_back(std::move(row));
        }
        out.push_back(std::move(s));
    }
    return AbsorptionTable(std::move(out));
}

double planck_intensity(double temperature, double nu) {
    if (!(temperature > 0.0)) throw DomainError("planck_intensity: temperature must be positive");
    if (!(nu > 0.0)) throw DomainError("planck_intensity: wavenumber must be positive");
    const double eta = 100.0 * nu;  // m^-1
    const double x = c2 * eta / temperature;
    const double per_m = 2.0 * phys::planck_h * phys::light_c * phys::light_c * eta * eta * eta / std::expm1(x);
    return 100.0 * per_m;
}

double total_blackbody_intensity(double temperature) {
    if (!(temperature > 0.0)) throw DomainError("blackbody temperature must be positive");
    const double t2 = temperature * temperature;
    return phys::stefan_boltzmann * t2 * t2 / phys::pi;
}

double band_intensity(double temperature, double nu_lo, double nu_hi) {
    if (!(temperature > 0.0)) throw DomainError("band_intensity: temperature must be positive");
    const double width = nu_hi - nu_lo;
    const int panels = std::max(1, static_cast<int>(std::ceil(width / max_panel_width - 1e-9)));
    const double h = width / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = nu_lo + (p + 0.5) * h;
        double panel = 0.0;
        for (std::size_t q = 0; q < gl_nodes.size(); ++q) {
            panel += gl_weights[q] * planck_intensity(temperature, mid + 0.5 * h * gl_nodes[q]);
        }
        sum += 0.5 * h * panel;
    }
    return sum;
}

BandBlackbody band_blackbody(double temperature, const BandGrid& grid) {
    BandBlackbody out;
    out.in_band.resize(grid.size());
    double total = 0.0;
    for (std::size_t b = 0; b < grid.size(); ++b) {
        out.in_band[b] = band_intensity(temperature, grid.lower(b), grid.upper(b));
        total += out.in_band[b];
    }
    out.out_of_band = std::max(0.0, total_blackbody_intensity(temperature) - total);
    return out;
}

double absorption_coefficient(std::size_t band, const GasState& gas, const AbsorptionTable& table) {
    gas.validate();
    const std::array<double, 3> fractions{gas.x_co2, gas.x_h2o, gas.x_co};
    double kappa = 0.0;
    for (std::size_t g = 0; g < fractions.size(); ++g) {
        if (fractions[g] == 0.0) continue;
        const SpeciesTable* s = table.find(species_names[g]);
        if (s == nullptr) {
            throw ConfigError(std::string("no absorption data for species ") + species_names[g], "absorption_table");
        }
        if (band >= s->k.size()) throw ConfigError("band index outside absorption table", "absorption_table");
        kappa += fractions[g] * s->interpolate(band, gas.temperature);
    }
    return gas.pressure * kappa;
}

double path_transmissivity(std::span<const PathSegment> segments) {
    double optical_depth = 0.0;
    for (const auto& s : segments) {
        if (!(s.kappa >= 0.0) || !(s.length >= 0.0)) {
            throw DomainError("path_transmissivity: kappa and length must be non-negative");
        }
        optical_depth += s.kappa * s.length;
    }
    return std::exp(-optical_depth);
}

}  // namespace rte
