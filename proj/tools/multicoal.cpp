// multicoal: construct multitype coalescents from their characterizing
// measures, simulate them exactly, evaluate merger rates and processing
// speeds, decide coming-down-from-infinity, and run the verification suites.
//
// Exit codes: 0 success, 1 verification failure, 2 invalid usage or config.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multicoal/analysis.hpp"
#include "multicoal/arrays.hpp"
#include "multicoal/io.hpp"
#include "multicoal/presets.hpp"
#include "multicoal/simulate.hpp"
#include "multicoal/suites.hpp"

namespace {

using namespace multicoal;

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::invalid_argument("expected a comma-separated list of numbers");
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    for (double v : parse_doubles(csv)) out.push_back(static_cast<int>(v));
    return out;
}

std::uint64_t effective_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("MULTICOAL_SEED")) return std::strtoull(env, nullptr, 10);
    return flag_seed;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::invalid_argument("cannot open output file: " + path);
    return file;
}

int run_examples(const std::string& out_dir) {
    const std::vector<std::pair<std::string, MergerMeasureSet>> examples = {
        {"multitype-kingman.json", multitype_kingman()},
        {"seed-bank.json", seed_bank()},
        {"limic-sturm.json", limic_sturm()},
        {"csbp-local.json", csbp_local_example()},
    };
    for (const auto& [name, measure] : examples) {
        const std::string path = out_dir.empty() ? name : out_dir + "/" + name;
        std::ofstream out(path);
        if (!out) throw std::invalid_argument("cannot write " + path);
        out << measure_set_to_json(measure).dump(2) << "\n";
        std::cout << path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multitype coalescent toolkit"};
    app.require_subcommand(1);

    // examples
    auto* cmd_examples = app.add_subcommand("examples", "materialize the built-in example configs");
    std::string out_dir;
    cmd_examples->add_option("--out-dir", out_dir, "directory to write into (default: cwd)");

    // rates
    auto* cmd_rates = app.add_subcommand("rates", "merger rate queries and transition tables");
    std::string rates_config, rates_b, rates_k, rates_n, rates_out;
    int rates_target = 1;
    bool rates_table = false;
    std::size_t rates_cap = 1'000'000;
    cmd_rates->add_option("--config", rates_config, "measure config JSON")->required();
    cmd_rates->add_option("--b", rates_b, "standing blocks per type, e.g. 2,1");
    cmd_rates->add_option("--k", rates_k, "merging blocks per type, e.g. 1,1");
    cmd_rates->add_option("--target", rates_target, "target type (1-based)");
    cmd_rates->add_flag("--table", rates_table, "emit the CSV transition table for --n");
    cmd_rates->add_option("--n", rates_n, "state for --table, e.g. 2,2");
    cmd_rates->add_option("--cap", rates_cap, "class enumeration cap");
    cmd_rates->add_option("--out", rates_out, "output file (default: stdout)");

    // simulate
    auto* cmd_sim = app.add_subcommand("simulate", "simulate trajectories, CSV output");
    std::string sim_config, sim_n0, sim_engine = "jump", sim_out;
    double sim_tmax = 1.0;
    std::uint64_t sim_seed = 0;
    std::size_t sim_replicas = 1;
    cmd_sim->add_option("--config", sim_config)->required();
    cmd_sim->add_option("--n0", sim_n0, "initial blocks per type, e.g. 5,3")->required();
    cmd_sim->add_option("--t-max", sim_tmax);
    cmd_sim->add_option("--seed", sim_seed);
    cmd_sim->add_option("--replicas", sim_replicas);
    cmd_sim->add_option("--engine", sim_engine, "jump | atomic");
    cmd_sim->add_option("--out", sim_out, "output CSV (default: stdout)");

    // cdi
    auto* cmd_cdi = app.add_subcommand("cdi", "coming-down-from-infinity classification");
    std::string cdi_config, cdi_out;
    double cdi_qmax = 1e8, cdi_margin = 0.1;
    bool cdi_numeric = false;
    cmd_cdi->add_option("--config", cdi_config)->required();
    cmd_cdi->add_option("--q-max", cdi_qmax);
    cmd_cdi->add_option("--margin", cdi_margin);
    cmd_cdi->add_flag("--numeric", cdi_numeric, "skip analytic shortcuts, fit the tail exponent");
    cmd_cdi->add_option("--out", cdi_out);

    // flow
    auto* cmd_flow = app.add_subcommand("flow", "descent profile w(t) or flow profile v(t), CSV");
    std::string flow_config, flow_grid, flow_x0, flow_kernel = "asymptotic", flow_out;
    cmd_flow->add_option("--config", flow_config)->required();
    cmd_flow->add_option("--t-grid", flow_grid, "times, e.g. 0.1,0.5,1")->required();
    cmd_flow->add_option("--x0", flow_x0,
                         "start per type for the flow profile, or 'inf' for the descent profile")
        ->required();
    cmd_flow->add_option("--kernel", flow_kernel, "descent speed kernel: asymptotic | exact");
    cmd_flow->add_option("--out", flow_out);

    // arrays
    auto* cmd_arrays = app.add_subcommand("arrays", "build a rate array, check the recursion, "
                                                    "emit the recovery report");
    std::string arrays_rep, arrays_out;
    int arrays_order = 10;
    cmd_arrays->add_option("--rep", arrays_rep, "representation JSON")->required();
    cmd_arrays->add_option("--moment-order", arrays_order);
    cmd_arrays->add_option("--out", arrays_out);

    // verify
    auto* cmd_verify = app.add_subcommand("verify", "run a named verification suite");
    std::string verify_suite, verify_config, verify_n0, verify_out;
    std::uint64_t verify_seed = 20260808;
    std::size_t verify_replicas = 100'000;
    int verify_instances = 100;
    cmd_verify
        ->add_option("suite", verify_suite,
                     "drift | consistency | jensen | exchange | inequalities | recursion")
        ->required();
    cmd_verify->add_option("--config", verify_config, "run against this measure config");
    cmd_verify->add_option("--n0", verify_n0, "initial blocks when --config is given");
    cmd_verify->add_option("--seed", verify_seed);
    cmd_verify->add_option("--replicas", verify_replicas);
    cmd_verify->add_option("--instances", verify_instances, "fuzz instances (recursion suite)");
    cmd_verify->add_option("--out", verify_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_examples) return run_examples(out_dir);

        if (*cmd_rates) {
            const MergerMeasureSet m = load_measure_set(rates_config);
            std::ofstream file;
            std::ostream& os = open_output(file, rates_out);
            if (rates_table) {
                if (rates_n.empty()) throw std::invalid_argument("rates --table requires --n");
                const TransitionTable table =
                    transition_table(m, BlockCounts(parse_ints(rates_n)), rates_cap);
                write_transition_table_csv(os, table, m.dim());
            } else {
                if (rates_b.empty() || rates_k.empty())
                    throw std::invalid_argument("rates requires --b and --k (or --table)");
                const double rate = merger_rate(m, BlockCounts(parse_ints(rates_b)),
                                                BlockCounts(parse_ints(rates_k)), rates_target - 1);
                os << format_double(rate) << "\n";
            }
            return 0;
        }

        if (*cmd_sim) {
            const MergerMeasureSet m = load_measure_set(sim_config);
            const BlockCounts n0(parse_ints(sim_n0));
            const std::uint64_t seed = effective_seed(sim_seed);
            std::ofstream file;
            std::ostream& os = open_output(file, sim_out);
            if (sim_engine != "jump" && sim_engine != "atomic")
                throw std::invalid_argument("simulate: --engine must be jump or atomic");
            TableCache cache;
            for (std::size_t r = 0; r < sim_replicas; ++r) {
                StreamRng rng(seed, r);
                Trajectory traj;
                if (sim_engine == "jump") {
                    traj = simulate_jump_chain(m, n0, sim_tmax, rng, 1'000'000, &cache);
                } else {
                    traj = simulate_labelled(m, TypedPartition::singletons(n0), sim_tmax, rng)
                               .trajectory;
                }
                write_trajectory_csv(os, traj, r, r == 0);
            }
            return 0;
        }

        if (*cmd_cdi) {
            const MergerMeasureSet m = load_measure_set(cdi_config);
            CdiOptions opt;
            opt.q_max = cdi_qmax;
            opt.margin = cdi_margin;
            opt.use_shortcuts = !cdi_numeric;
            std::ofstream file;
            std::ostream& os = open_output(file, cdi_out);
            os << cdi_report_to_json(classify_cdi(m, opt)).dump(2) << "\n";
            return 0;
        }

        if (*cmd_flow) {
            const MergerMeasureSet m = load_measure_set(flow_config);
            const std::vector<double> times = parse_doubles(flow_grid);
            std::ofstream file;
            std::ostream& os = open_output(file, flow_out);
            DescentOptions opt;
            if (flow_kernel == "exact")
                opt.kernel = SpeedKernel::exact;
            else if (flow_kernel != "asymptotic")
                throw std::invalid_argument("flow: --kernel must be asymptotic or exact");
            if (flow_x0 == "inf") {
                const std::vector<double> w = descent_profile(m, times, std::nullopt, opt);
                os << "t,w\n";
                for (std::size_t i = 0; i < times.size(); ++i)
                    os << format_double(times[i]) << "," << format_double(w[i]) << "\n";
            } else {
                const std::vector<double> x0 = parse_doubles(flow_x0);
                const auto path = flow_profile(m, times, x0);
                os << "t";
                for (int i = 1; i <= m.dim(); ++i) os << ",v_" << i;
                os << "\n";
                for (std::size_t i = 0; i < times.size(); ++i) {
                    os << format_double(times[i]);
                    for (double v : path[i]) os << "," << format_double(v);
                    os << "\n";
                }
            }
            return 0;
        }

        if (*cmd_arrays) {
            std::ifstream in(arrays_rep);
            if (!in) throw std::invalid_argument("cannot open " + arrays_rep);
            json config;
            in >> config;
            ArrayRepresentation rep = array_representation_from_json(config);
            const RateArray array = array_from_representation(rep.domain, rep.rho, rep.j);
            const RecoveryReport recovery = recover_representation(array, arrays_order);
            std::ofstream file;
            std::ostream& os = open_output(file, arrays_out);
            os << recovery_report_to_json(recovery).dump(2) << "\n";
            return 0;
        }

        if (*cmd_verify) {
            const std::uint64_t seed = effective_seed(verify_seed);
            std::optional<MergerMeasureSet> fixed;
            if (!verify_config.empty()) fixed = load_measure_set(verify_config);
            auto default_n0 = [&](int per_type) {
                if (!verify_n0.empty()) return BlockCounts(parse_ints(verify_n0));
                return BlockCounts(std::vector<int>(fixed->dim(), per_type));
            };

            std::vector<TestReport> reports;
            if (verify_suite == "recursion") {
                reports = suite_recursion(seed, verify_instances, 10, fixed);
            } else if (verify_suite == "inequalities") {
                reports = suite_inequalities(seed, 1000, fixed);
            } else if (verify_suite == "drift") {
                if (fixed)
                    reports.push_back(mc_drift_check(*fixed, default_n0(4), 0.0, verify_replicas, seed));
                else
                    reports = suite_drift(seed, verify_replicas);
            } else if (verify_suite == "consistency") {
                if (fixed) {
                    const BlockCounts n0 = default_n0(2);
                    reports.push_back(engine_equivalence_check(*fixed, n0, 1.0, verify_replicas, seed));
                    const TypedPartition p0 = TypedPartition::singletons(n0);
                    std::vector<GroundElement> subset = p0.ground_set();
                    if (subset.size() > 1) subset.pop_back();
                    reports.push_back(
                        consistency_check(*fixed, p0, subset, 1.0, verify_replicas, seed + 1));
                } else {
                    reports = suite_consistency(seed, verify_replicas);
                }
            } else if (verify_suite == "jensen") {
                if (fixed)
                    reports.push_back(jensen_bound_check(*fixed, default_n0(5), {0.25, 1.0},
                                                         verify_replicas, seed));
                else
                    reports = suite_jensen(seed, verify_replicas);
            } else if (verify_suite == "exchange") {
                if (fixed) {
                    const BlockCounts n0 = default_n0(2);
                    if (n0[0] < 2)
                        throw std::invalid_argument("exchange: need >= 2 blocks of type 1");
                    std::vector<std::vector<int>> sigma(fixed->dim());
                    for (int i = 0; i < fixed->dim(); ++i) {
                        sigma[i].resize(n0[i]);
                        for (int p = 0; p < n0[i]; ++p) sigma[i][p] = p;
                    }
                    std::swap(sigma[0][0], sigma[0][1]);
                    reports.push_back(exchangeability_check(*fixed, TypedPartition::singletons(n0),
                                                            sigma, 1.0, verify_replicas, seed));
                } else {
                    reports = suite_exchange(seed, verify_replicas);
                }
            } else {
                throw std::invalid_argument("unknown verify suite: " + verify_suite);
            }

            json out = json::array();
            bool all_pass = true;
            for (const auto& r : reports) {
                out.push_back(test_report_to_json(r));
                all_pass &= r.pass;
            }
            std::ofstream file;
            std::ostream& os = open_output(file, verify_out);
            os << out.dump(2) << "\n";
            return all_pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
