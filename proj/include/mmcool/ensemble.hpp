#ifndef MMCOOL_ENSEMBLE_HPP
#define MMCOOL_ENSEMBLE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "accumulate.hpp"
#include "sde_engine.hpp"

namespace mmcool {

enum class Sampling {
    independent,
    // Trajectories in groups of four: the initial condition and its quarter-
    // period phase-space rotation, each run with a noise path and its
    // negative. Cancels the leading noise and breathing terms of <p^2>.
    paired,
};

struct EnsembleOptions {
    Sampling sampling = Sampling::independent;
    int subensembles = 10;
    int workers = 1;
    bool keep_trajectories = false;
};

struct EnsembleResult {
    std::vector<double> t;
    std::vector<double> mean_p2;
    std::vector<double> var_p2; // sample variance across trajectories
    std::vector<std::vector<double>> subensemble_mean_p2;
    std::vector<int> subensemble_size;
    std::vector<Trajectory> trajectories; // only with keep_trajectories
    int completed = 0;
    int aborted = 0;
};

// Thermal phase-space point of the harmonic trap at temperature T0 (K):
// Gaussian position and momentum with variances k_B T0 / k_t and m k_B T0.
struct ThermalSample {
    double x;
    double p;
};

inline ThermalSample sample_thermal(const Model& model, double temperature, RandomStream& rng) {
    const Mechanics& m = model.mechanics;
    const double t = model.grid.units().to_temperature(temperature);
    const double sp = m.mobility > 0 ? std::sqrt(t / m.mobility) : 0.0;
    const double sx = (m.trap_frequency > 0 && !m.pinned)
                          ? std::sqrt(t * m.mobility) / m.trap_frequency
                          : 0.0;
    const double a = rng.normal();
    const double b = rng.normal();
    return {m.center + sx * a, sp * b};
}

namespace detail {

struct ChunkSums {
    std::vector<CompensatedSum> p2;
    std::vector<CompensatedSum> p4;
    int completed = 0;
    int aborted = 0;
};

struct TrajectoryPlan {
    std::uint64_t stream;
    bool rotate;
    double noise_sign;
};

inline TrajectoryPlan plan_for(int index, Sampling sampling) {
    if (sampling == Sampling::paired)
        return {static_cast<std::uint64_t>(index / 4), (index & 1) != 0, (index & 2) ? -1.0 : 1.0};
    return {static_cast<std::uint64_t>(index), false, 1.0};
}

} // namespace detail

// Runs config.trajectory_count trajectories from thermal initial conditions
// at config.initial_temperature, the field in the pump state. Trajectories
// are split into contiguous sub-ensembles; partial sums are merged in index
// order so results do not depend on the number of workers.
inline EnsembleResult run_ensemble(const Model& model, const PhysicalParams& params,
                                   const RunConfig& config, const EnsembleOptions& options = {}) {
    validate(config, model.grid);
    const int n = config.trajectory_count;
    const int align = options.sampling == Sampling::paired ? 4 : 1;
    const int nsub = std::clamp(options.subensembles, 1, std::max(1, n / align));

    std::vector<int> sub_start(static_cast<std::size_t>(nsub) + 1);
    for (int j = 0; j <= nsub; ++j) {
        const long long s = static_cast<long long>(j) * n / nsub;
        sub_start[static_cast<std::size_t>(j)] = j == nsub ? n : static_cast<int>(s - s % align);
    }

    constexpr int max_chunk = 64;
    struct Chunk {
        int sub, begin, end;
    };
    std::vector<Chunk> chunks;
    for (int j = 0; j < nsub; ++j) {
        for (int b = sub_start[static_cast<std::size_t>(j)]; b < sub_start[static_cast<std::size_t>(j) + 1];
             b += max_chunk)
            chunks.push_back({j, b, std::min(b + max_chunk, sub_start[static_cast<std::size_t>(j) + 1])});
    }

    const auto samples = static_cast<std::size_t>(config.sample_count());
    const FieldState pump = pump_initial_state(model.grid, params);
    std::vector<detail::ChunkSums> results(chunks.size());
    std::vector<std::optional<Trajectory>> kept(options.keep_trajectories ? static_cast<std::size_t>(n) : 0);

    auto run_chunk = [&](std::size_t ci) {
        const Chunk& c = chunks[ci];
        detail::ChunkSums& out = results[ci];
        out.p2.assign(samples, {});
        out.p4.assign(samples, {});
        std::vector<double> p2(samples);
        for (int i = c.begin; i < c.end; ++i) {
            const detail::TrajectoryPlan plan = detail::plan_for(i, options.sampling);
            RandomStream rng(config.master_seed, plan.stream);
            ThermalSample z = sample_thermal(model, config.initial_temperature, rng);
            if (plan.rotate && model.mechanics.trap_frequency > 0 && !model.mechanics.pinned) {
                const Mechanics& m = model.mechanics;
                const double u = z.x - m.center, v = m.mobility * z.p;
                z = {m.center + v / m.trap_frequency, -u * m.trap_frequency / m.mobility};
            }
            SystemState s;
            s.x = z.x;
            s.p = z.p;
            s.field = pump;
            Trajectory tr;
            try {
                integrate(model, config, s, rng, [&](long long k, const SystemState& st) {
                    p2[static_cast<std::size_t>(k)] = st.p * st.p;
                    if (options.keep_trajectories) {
                        tr.t.push_back(st.t);
                        tr.x.push_back(st.x);
                        tr.p.push_back(st.p);
                        tr.p2.push_back(st.p * st.p);
                    }
                }, plan.noise_sign);
            } catch (const NumericalAbort&) {
                ++out.aborted;
                continue;
            }
            ++out.completed;
            for (std::size_t k = 0; k < samples; ++k) {
                out.p2[k].add(p2[k]);
                out.p4[k].add(p2[k] * p2[k]);
            }
            if (options.keep_trajectories) {
                tr.stream = plan.stream;
                tr.final_state = std::move(s);
                kept[static_cast<std::size_t>(i)] = std::move(tr);
            }
        }
    };

    const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(chunks.size())));
    if (workers == 1) {
        for (std::size_t ci = 0; ci < chunks.size(); ++ci) run_chunk(ci);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t ci = next++; ci < chunks.size(); ci = next++) {
                    try {
                        run_chunk(ci);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    EnsembleResult r;
    r.t.resize(samples);
    for (std::size_t k = 0; k < samples; ++k)
        r.t[k] = static_cast<double>(k) * config.record_stride * config.dt;
    std::vector<CompensatedSum> tot2(samples), tot4(samples);
    std::vector<std::vector<CompensatedSum>> sub2(static_cast<std::size_t>(nsub),
                                                  std::vector<CompensatedSum>(samples));
    std::vector<int> sub_count(static_cast<std::size_t>(nsub), 0);
    for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
        const auto j = static_cast<std::size_t>(chunks[ci].sub);
        sub_count[j] += results[ci].completed;
        r.completed += results[ci].completed;
        r.aborted += results[ci].aborted;
        for (std::size_t k = 0; k < samples; ++k) {
            sub2[j][k].add(results[ci].p2[k]);
            tot4[k].add(results[ci].p4[k]);
        }
    }
    for (std::size_t j = 0; j < sub2.size(); ++j)
        for (std::size_t k = 0; k < samples; ++k) tot2[k].add(sub2[j][k]);

    r.mean_p2.resize(samples);
    r.var_p2.resize(samples);
    const double cnt = r.completed;
    for (std::size_t k = 0; k < samples; ++k) {
        const double m = cnt > 0 ? tot2[k].value() / cnt : 0.0;
        r.mean_p2[k] = m;
        r.var_p2[k] = cnt > 1 ? std::max(0.0, (tot4[k].value() - cnt * m * m) / (cnt - 1)) : 0.0;
    }
    for (std::size_t j = 0; j < sub2.size(); ++j) {
        if (sub_count[j] == 0) continue;
        std::vector<double> m(samples);
        for (std::size_t k = 0; k < samples; ++k) m[k] = sub2[j][k].value() / sub_count[j];
        r.subensemble_mean_p2.push_back(std::move(m));
        r.subensemble_size.push_back(sub_count[j]);
    }
    for (auto& tr : kept)
        if (tr) r.trajectories.push_back(std::move(*tr));
    return r;
}

} // namespace mmcool

#endif // MMCOOL_ENSEMBLE_HPP
