#include "hyperrx/ledger.hpp"

#include <stdexcept>

namespace hyperrx {

double complexity_ratio(const ComplexityLedger& hyper, const ComplexityLedger& online) {
    const double denom = online.total();
    if (denom == 0.0) throw std::invalid_argument("complexity_ratio: online ledger is zero");
    return hyper.total() / denom;
}

double closed_form_ratio(double alpha_t, double alpha_i, std::size_t module_size,
                         std::size_t hyper_size, std::size_t b_pilot, std::size_t b_info,
                         int n_antennas, double c_ls) {
    const double theta = static_cast<double>(module_size);
    const double phi = static_cast<double>(hyper_size);
    const double numer = alpha_i * (theta * static_cast<double>(b_info) + phi) +
                         c_ls * n_antennas * static_cast<double>(b_pilot);
    const double denom =
        (alpha_t * static_cast<double>(b_pilot) + alpha_i * static_cast<double>(b_info)) * theta;
    return numer / denom;
}

double approx_ratio(double alpha_t, double alpha_i, std::size_t module_size,
                    std::size_t hyper_size, std::size_t b_pilot, std::size_t b_info) {
    const double theta = static_cast<double>(module_size);
    const double phi = static_cast<double>(hyper_size);
    return (alpha_i * static_cast<double>(b_info)) / (alpha_t * static_cast<double>(b_pilot)) *
           (1.0 + phi / (theta * static_cast<double>(b_info)));
}

}  // namespace hyperrx
