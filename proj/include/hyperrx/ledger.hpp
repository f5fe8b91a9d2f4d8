#pragma once

#include <atomic>
#include <cstddef>

namespace hyperrx {

// Weighted counters of the work a method performs per block: alpha_t units
// per trained symbol-parameter, alpha_i per inferred symbol-parameter, and
// c_ls inside the O(N * B_pilot * K) least-squares term. Counters only
// ever grow within a run; accumulation is race-free so independent blocks
// may be processed concurrently.
class ComplexityLedger {
public:
    ComplexityLedger(double alpha_t, double alpha_i, double c_ls = 1.0)
        : alpha_t_(alpha_t), alpha_i_(alpha_i), c_ls_(c_ls) {}

    ComplexityLedger(const ComplexityLedger& o)
        : alpha_t_(o.alpha_t_), alpha_i_(o.alpha_i_), c_ls_(o.c_ls_) {
        training_.store(o.training_.load());
        inference_.store(o.inference_.load());
        hyper_.store(o.hyper_.load());
        ls_.store(o.ls_.load());
    }

    ComplexityLedger& operator=(const ComplexityLedger& o) {
        alpha_t_ = o.alpha_t_;
        alpha_i_ = o.alpha_i_;
        c_ls_ = o.c_ls_;
        training_.store(o.training_.load());
        inference_.store(o.inference_.load());
        hyper_.store(o.hyper_.load());
        ls_.store(o.ls_.load());
        return *this;
    }

    // Re-training K modules of module_size parameters on B_pilot pilots.
    void record_training(std::size_t module_size, std::size_t b_pilot, int k) {
        add(training_, alpha_t_ * static_cast<double>(module_size) *
                           static_cast<double>(b_pilot) * k);
    }

    // Detecting B_info symbols with K modules of module_size parameters.
    void record_inference(std::size_t module_size, std::size_t b_info, int k) {
        add(inference_, alpha_i_ * static_cast<double>(module_size) *
                            static_cast<double>(b_info) * k);
    }

    // K generator-network runs of hyper_size parameters (once per block).
    void record_hyper(std::size_t hyper_size, int k) {
        add(hyper_, alpha_i_ * static_cast<double>(hyper_size) * k);
    }

    // Least-squares estimation from B_pilot measurements.
    void record_ls(int n_antennas, std::size_t b_pilot, int k) {
        add(ls_, c_ls_ * n_antennas * static_cast<double>(b_pilot) * k);
    }

    double training_units() const { return training_.load(); }
    double inference_units() const { return inference_.load(); }
    double hyper_units() const { return hyper_.load(); }
    double ls_units() const { return ls_.load(); }
    double total() const {
        return training_units() + inference_units() + hyper_units() + ls_units();
    }

    double alpha_t() const { return alpha_t_; }
    double alpha_i() const { return alpha_i_; }
    double c_ls() const { return c_ls_; }

private:
    static void add(std::atomic<double>& counter, double units) {
        counter.fetch_add(units, std::memory_order_relaxed);
    }

    double alpha_t_, alpha_i_, c_ls_;
    std::atomic<double> training_{0.0};
    std::atomic<double> inference_{0.0};
    std::atomic<double> hyper_{0.0};
    std::atomic<double> ls_{0.0};
};

// Measured per-block complexity ratio of two ledgers.
double complexity_ratio(const ComplexityLedger& hyper, const ComplexityLedger& online);

// Closed-form per-block ratio of hypernetwork adaptation vs online
// learning (K cancels):
//   [alpha_i (|theta| B_info + |phi|) + c_ls N B_pilot]
//   / [(alpha_t B_pilot + alpha_i B_info) |theta|]
double closed_form_ratio(double alpha_t, double alpha_i, std::size_t module_size,
                         std::size_t hyper_size, std::size_t b_pilot, std::size_t b_info,
                         int n_antennas, double c_ls = 1.0);

// Approximation under "training dominates detection" and "LS is cheap":
//   (alpha_i B_info)/(alpha_t B_pilot) * (1 + |phi| / (|theta| B_info))
double approx_ratio(double alpha_t, double alpha_i, std::size_t module_size,
                    std::size_t hyper_size, std::size_t b_pilot, std::size_t b_info);

}  // namespace hyperrx
