#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rte {

namespace phys {
inline constexpr double planck_h = 6.62607015e-34;   // J s
inline constexpr double light_c = 299792458.0;       // m / s
inline constexpr double boltzmann_k = 1.380649e-23;  // J / K
inline constexpr double stefan_boltzmann = 5.670374419e-8;
inline constexpr double pi = 3.14159265358979323846;
}  // namespace phys

// Uniform wavenumber grid of half-open bands [nu_min + i*dnu, nu_min + (i+1)*dnu), cm^-1.
class BandGrid {
public:
    BandGrid(double nu_min, double nu_max, double delta_nu);

    double nu_min() const noexcept { return nu_min_; }
    double nu_max() const noexcept { return nu_max_; }
    double delta_nu() const noexcept { return delta_nu_; }
    std::size_t size() const noexcept { return count_; }

    double lower(std::size_t band) const noexcept { return nu_min_ + static_cast<double>(band) * delta_nu_; }
    double upper(std::size_t band) const noexcept { return lower(band) + delta_nu_; }
    double center(std::size_t band) const noexcept { return lower(band) + 0.5 * delta_nu_; }

    bool operator==(const BandGrid&) const = default;

private:
    double nu_min_;
    double nu_max_;
    double delta_nu_;
    std::size_t count_;
};

struct GasState {
    double temperature;  // K
    double pressure;     // atm
    double x_co2 = 0.0;
    double x_h2o = 0.0;
    double x_co = 0.0;

    void validate() const;
};

enum class Species { co2 = 0, h2o = 1, co = 2 };
inline constexpr std::array<const char*, 3> species_names{"CO2", "H2O", "CO"};

// Tabulated pressure-based absorption coefficient k (m^-1 atm^-1 per unit mole
// fraction) for one species, indexed [band][reference temperature].
struct SpeciesTable {
    std::string name;
    std::vector<double> band_centers;      // cm^-1, strictly increasing
    std::vector<double> ref_temperatures;  // K, strictly increasing
    std::vector<std::vector<double>> k;    // [band][temperature]

    void validate() const;
    // Piecewise-linear in T, clamped to the end values outside the table.
    double interpolate(std::size_t band, double temperature) const;
};

class AbsorptionTable {
public:
    AbsorptionTable() = default;
    explicit AbsorptionTable(std::vector<SpeciesTable> species);

    static AbsorptionTable load(const std::filesystem::path& path);
    static AbsorptionTable from_json_text(const std::string& text);
    std::string to_json_text() const;
    void save(const std::filesystem::path& path) const;

    // Throws ConfigError when band centers disagree with the grid.
    void check_grid(const BandGrid& grid) const;

    const SpeciesTable* find(std::string_view name) const noexcept;
    const std::vector<SpeciesTable>& species() const noexcept { return species_; }

private:
    std::vector<SpeciesTable> species_;
};

// Smooth band-shaped stand-in data for CO2 (15, 4.3, 2.7 um), H2O (rotational,
// 6.3, 2.7, 1.87, 1.38 um) and CO (4.7 um and overtone) on the given grid.
AbsorptionTable synthetic_absorption_table(const BandGrid& grid);

// Spectral blackbody intensity in W m^-2 sr^-1 per cm^-1.
double planck_intensity(double temperature, double nu);

// Blackbody intensity sigma*T^4/pi.
double total_blackbody_intensity(double temperature);

struct BandBlackbody {
    std::vector<double> in_band;  // W m^-2 sr^-1 per band
    double out_of_band = 0.0;     // remainder of sigma*T^4/pi outside the grid
};

// Band-integrated Planck intensities by composite 4-point Gauss-Legendre
// (one panel per 25 cm^-1 or less).
BandBlackbody band_blackbody(double temperature, const BandGrid& grid);

// Integral of planck_intensity over one band.
double band_intensity(double temperature, double nu_lo, double nu_hi);

// kappa = p * sum_g x_g * k_g(band, T), m^-1.
double absorption_coefficient(std::size_t band, const GasState& gas, const AbsorptionTable& table);

struct PathSegment {
    double kappa;   // m^-1
    double length;  // m
};

double path_transmissivity(std::span<const PathSegment> segments);

}  // namespace rte
