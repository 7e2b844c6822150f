#include "deepsic/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "deepsic/metrics.hpp"
#include "deepsic/noma.hpp"

namespace deepsic {

namespace fs = std::filesystem;

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct ArtifactWriter {
    fs::path dir;
    std::vector<std::string> names;

    std::ofstream open(const std::string& name) {
        names.push_back(name);
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error("cannot open " + (dir / name).string());
        return out;
    }
};

// Sliding feature windows [rsrq, cqi, pdd, snr] with next-step targets.
Dataset windows_from_trace(const ChannelTrace& trace, int seq_len, int d_out, int max_windows) {
    Dataset data;
    const std::size_t users = trace.observables.size();
    const std::size_t steps = trace.observables.empty() ? 0 : trace.observables[0].size();
    for (std::size_t start = 0; start + static_cast<std::size_t>(seq_len) < steps; ++start) {
        for (std::size_t u = 0; u < users; ++u) {
            Sample s;
            s.window = RMat(static_cast<std::size_t>(seq_len), 4);
            for (int t = 0; t < seq_len; ++t) {
                const Observables& o = trace.observables[u][start + static_cast<std::size_t>(t)];
                s.window.at(static_cast<std::size_t>(t), 0) = o.rsrq_db;
                s.window.at(static_cast<std::size_t>(t), 1) = o.cqi;
                s.window.at(static_cast<std::size_t>(t), 2) = o.pdd_score;
                s.window.at(static_cast<std::size_t>(t), 3) = o.snr_db;
            }
            const Observables& next = trace.observables[u][start + static_cast<std::size_t>(seq_len)];
            if (d_out >= 2)
                s.target = {next.rsrq_db, next.snr_db};
            else
                s.target = {next.snr_db};
            data.push_back(std::move(s));
            if (static_cast<int>(data.size()) >= max_windows) return data;
        }
    }
    return data;
}

}  // namespace

std::string file_checksum_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot checksum " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char out[32];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

EstimationTrialResult run_estimation_trial(double snr_db, int n_pilot, int n_data,
                                           SeededRng& rng) {
    const double sigma2 = std::pow(10.0, -snr_db / 10.0);
    EstimationTrialResult res;
    res.true_gain = rng.complex_gaussian(1.0);

    // Pilot phase: unit pilots, matched-filter compression.
    cplx z = 0.0;
    for (int i = 0; i < n_pilot; ++i) {
        const cplx y = res.true_gain + rng.complex_gaussian(sigma2);
        z += y;
    }
    z /= static_cast<double>(n_pilot);
    res.ls = z;
    res.mmse = mmse_estimate_scalar(z, sigma2 / n_pilot);

    // Data phase.
    std::vector<cplx> s(static_cast<std::size_t>(n_data));
    std::vector<cplx> y(static_cast<std::size_t>(n_data));
    for (int i = 0; i < n_data; ++i) {
        const int b0 = static_cast<int>(rng.uniform_below(2));
        const int b1 = static_cast<int>(rng.uniform_below(2));
        s[static_cast<std::size_t>(i)] = qpsk_modulate(b0, b1);
        y[static_cast<std::size_t>(i)] =
            res.true_gain * s[static_cast<std::size_t>(i)] + rng.complex_gaussian(sigma2);
    }

    PowerAllocation pa{{1.0}};
    const double llr_gate = 2.0;

    auto refine = [&](bool with_pdd) {
        cplx gh = res.mmse;
        for (int round = 0; round < 6; ++round) {
            std::vector<cplx> s_hat(y.size());
            std::vector<double> rel(y.size());
            std::vector<cplx> resid(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) {
                const std::vector<cplx> truth = {s[i]};
                SicResult sic = sic_decode(y[i], {gh}, pa, {0}, sigma2, &truth);
                s_hat[i] = sic.stages[0].decoded_symbol;
                rel[i] = std::min(std::abs(sic.stages[0].llr.b0), std::abs(sic.stages[0].llr.b1));
                resid[i] = *sic.stages[0].pdd_residual;
            }
            const std::size_t n = y.size();
            CMat j(n, 1);
            CVec yv(n);
            CVec epdd(n);
            for (std::size_t i = 0; i < n; ++i) {
                j.at(i, 0) = s_hat[i];
                yv[i] = y[i];
                // Steers the decision-directed normal equations onto the
                // corrected symbols: the fixed point becomes the estimate a
                // pilot with the repaired symbols would give. Zero for
                // correctly decoded symbols.
                epdd[i] = -std::conj(resid[i]) * s_hat[i] * y[i];
            }
            const double lambda = static_cast<double>(n);  // unit-modulus symbols
            EstimatorState st;
            st.h_hat = CVec(1);
            st.h_hat[0] = gh;
            st.eta = 0.9 * 2.0 / lambda;
            st.guard_certified = true;
            LinearModel model{j, yv};
            const std::vector<double> gate_witness(1, llr_gate);
            for (int it = 0; it < 10; ++it) {
                st = with_pdd
                         ? pdd_corrected_update(st, model, epdd, gate_witness, llr_gate)
                         : pdd_corrected_update(st, model, CVec(), {}, llr_gate);
            }
            gh = st.h_hat[0];
        }
        return gh;
    };
    res.deepsic_no_pdd = refine(false);
    res.deepsic_with_pdd = refine(true);
    return res;
}

namespace {

void scenario_estimate(const RunConfig& cfg, ArtifactWriter& aw) {
    auto out = aw.open("estimate_nrmse.csv");
    out << "snr_db,estimator,nrmse\n";
    const int n_pilot = std::max(2, cfg.noma.n_pilot / 4);
    const int n_data = 64;
    for (std::size_t si = 0; si < cfg.snr_db_list.size(); ++si) {
        const double snr = cfg.snr_db_list[si];
        std::vector<double> actual;
        std::vector<double> pred_ls, pred_mmse, pred_np, pred_wp;
        for (int tr = 0; tr < cfg.trials; ++tr) {
            SeededRng rng(cfg.seed, si * 100000ULL + static_cast<std::uint64_t>(tr));
            const EstimationTrialResult r = run_estimation_trial(snr, n_pilot, n_data, rng);
            actual.push_back(r.true_gain.real());
            actual.push_back(r.true_gain.imag());
            auto push = [](std::vector<double>& v, cplx c) {
                v.push_back(c.real());
                v.push_back(c.imag());
            };
            push(pred_ls, r.ls);
            push(pred_mmse, r.mmse);
            push(pred_np, r.deepsic_no_pdd);
            push(pred_wp, r.deepsic_with_pdd);
        }
        out << fmt9(snr) << ",ls," << fmt9(nrmse(pred_ls, actual)) << '\n';
        out << fmt9(snr) << ",mmse," << fmt9(nrmse(pred_mmse, actual)) << '\n';
        out << fmt9(snr) << ",deepsic_no_pdd," << fmt9(nrmse(pred_np, actual)) << '\n';
        out << fmt9(snr) << ",deepsic_with_pdd," << fmt9(nrmse(pred_wp, actual)) << '\n';
    }
}

void scenario_train(const RunConfig& cfg, ArtifactWriter& aw) {
    SeededRng trace_rng(cfg.seed, 101);
    const ChannelTrace trace = generate_trace(cfg.channel, trace_rng);
    Dataset data =
        windows_from_trace(trace, cfg.transformer.seq_len, cfg.transformer.d_out,
                           cfg.train.windows);
    if (cfg.train.augment_noise_scale > 0.0) {
        SeededRng aug_rng(cfg.seed, 102);
        data = augment_dataset(data, aug_rng, cfg.train.augment_noise_scale);
    }
    std::vector<RMat> windows;
    for (const Sample& s : data) windows.push_back(s.window);

    SeededRng model_rng(cfg.seed, 777);
    TransformerModel model(cfg.transformer, model_rng);
    model.standardizer() = Standardizer::fit(windows);

    auto out = aw.open("train_loss.csv");
    out << "epoch,loss,flops_cumulative\n";
    for (int ep = 0; ep < cfg.train.epochs; ++ep) {
        double loss_sum = 0.0;
        for (const Sample& s : data)
            loss_sum += model.backward_and_step(model.encode(s.window), s.target,
                                                cfg.train.learning_rate);
        out << ep << ',' << fmt9(loss_sum / static_cast<double>(data.size())) << ','
            << model.flop_counter() << '\n';
    }
    auto ck = aw.open("model.json");
    ck << model.to_json();
}

void scenario_transfer(const RunConfig& cfg, ArtifactWriter& aw) {
    // Pretext training on one trace, transfer head on a fresh one.
    SeededRng trace_rng(cfg.seed, 201);
    const ChannelTrace pre_trace = generate_trace(cfg.channel, trace_rng);
    Dataset pre =
        windows_from_trace(pre_trace, cfg.transformer.seq_len, cfg.transformer.d_out,
                           cfg.train.windows / 2);
    std::vector<RMat> windows;
    for (const Sample& s : pre) windows.push_back(s.window);

    SeededRng model_rng(cfg.seed, 778);
    TransformerModel model(cfg.transformer, model_rng);
    model.standardizer() = Standardizer::fit(windows);
    for (int ep = 0; ep < std::max(1, cfg.train.epochs / 2); ++ep)
        for (const Sample& s : pre)
            model.backward_and_step(model.encode(s.window), s.target, cfg.train.learning_rate);

    model.freeze_backbone();
    SeededRng fit_rng(cfg.seed, 202);
    const ChannelTrace fit_trace = generate_trace(cfg.channel, fit_rng);
    Dataset all =
        windows_from_trace(fit_trace, cfg.transformer.seq_len, cfg.transformer.d_out,
                           cfg.train.windows);
    const std::size_t split = all.size() * 3 / 4;
    Dataset fit(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(split));
    Dataset held(all.begin() + static_cast<std::ptrdiff_t>(split), all.end());
    model.transfer_fit(fit, 2000, 0.05);

    nlohmann::json report;
    const char* names[] = {"rsrq", "snr"};
    for (int o = 0; o < cfg.transformer.d_out; ++o) {
        std::vector<double> pred, act;
        for (const Sample& s : held) {
            pred.push_back(model.forward(model.encode(s.window))[static_cast<std::size_t>(o)]);
            act.push_back(s.target[static_cast<std::size_t>(o)]);
        }
        const MetricReport r = metric_report(pred, act);
        report[names[std::min(o, 1)]] = {{"nrmse", r.nrmse},
                                         {"mase", r.mase},
                                         {"mse", r.mse},
                                         {"r2", r.r2},
                                         {"n_samples", r.n_samples}};
    }
    auto out = aw.open("transfer_report.json");
    out << report.dump(2);
}

void scenario_handover_sweep(const RunConfig& cfg, ArtifactWriter& aw) {
    SweepConfig sc;
    sc.handover = cfg.handover;
    sc.channel = cfg.channel;
    sc.steps_per_trial = cfg.steps_per_trial;
    sc.jobs = cfg.jobs;
    const SeededRng base(cfg.seed, 300);
    const std::vector<SweepRow> rows =
        run_mobility_sweep(cfg.velocities_kmh, cfg.trials, sc, base);
    aw.names.push_back("handover_sweep.csv");
    export_sweep_csv(rows, (aw.dir / "handover_sweep.csv").string());

    SeededRng ev_rng(cfg.seed, 300 + 2 * 1000003ULL);  // v index 2 = 60 km/h default
    const HandoverLog log =
        run_crossing_trial(cfg.handover.velocity_kmh, SweepPolicy::DeepSicWithPdd, sc, ev_rng);
    aw.names.push_back("handover_events.ndjson");
    export_events_ndjson(log, (aw.dir / "handover_events.ndjson").string());
}

void scenario_complexity_sweep(const RunConfig& cfg, ArtifactWriter& aw) {
    auto out = aw.open("complexity.csv");
    out << "k,per_user_flops,joint_flops\n";
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        SeededRng rng(cfg.seed, 400 + static_cast<std::uint64_t>(k));
        TransformerModel per_user(cfg.transformer, rng);
        RMat window(static_cast<std::size_t>(cfg.transformer.seq_len),
                    static_cast<std::size_t>(cfg.transformer.input_features));
        for (int u = 0; u < k; ++u) per_user.forward(per_user.encode(window));

        TransformerConfig joint_cfg = cfg.transformer;
        joint_cfg.seq_len = cfg.transformer.seq_len * k;
        SeededRng rng2(cfg.seed, 500 + static_cast<std::uint64_t>(k));
        TransformerModel joint(joint_cfg, rng2);
        RMat jwindow(static_cast<std::size_t>(joint_cfg.seq_len),
                     static_cast<std::size_t>(joint_cfg.input_features));
        joint.forward(joint.encode(jwindow));

        out << k << ',' << per_user.flop_counter() << ',' << joint.flop_counter() << '\n';
    }
}

int scenario_theory_check(const RunConfig& cfg, ArtifactWriter& aw) {
    nlohmann::json report;

    // Proposition-style stability certificate on a well-conditioned instance.
    SeededRng rng(cfg.seed, 600);
    const std::size_t n = 4;
    CMat j(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            j.at(r, c) = 0.3 * rng.complex_gaussian(1.0) + (r == c ? cplx(2.0) : cplx(0.0));
    const auto psi = [](const CVec& x) {
        CVec y = x;
        y *= 0.1;  // gated correction operator, deliberately contractive
        return y;
    };
    SeededRng beta_rng(cfg.seed, 601);
    const double beta = estimate_beta_lipschitz(psi, beta_rng, n);

    SeededRng model_rng(cfg.seed, 602);
    TransformerModel model(cfg.transformer, model_rng);
    const double w_att = model.w_att_frobenius();

    const CMat jtj = j.adjoint().mul(j);
    const double lmax = power_iteration_lambda_max(jtj);
    const double gamma_e = std::max(1e-6, smallest_eigenvalue(jtj));
    const double eta = 0.9 * 2.0 / (lmax + beta);
    const double eps_pdd = 0.5 * eta * gamma_e / (2.0 * w_att);
    const BoundCertificate cert = certify_convergence(j, beta, eta, eps_pdd, w_att, gamma_e);
    report["proposition1"] = nlohmann::json::parse(certificate_to_json(cert));
    report["proposition1"]["beta"] = beta;
    report["proposition1"]["eta"] = eta;
    report["proposition1"]["gamma_e"] = gamma_e;
    report["proposition1"]["w_att_frobenius"] = w_att;

    // Estimation-error envelope over refinement iterations.
    {
        SeededRng inst_rng(cfg.seed, 603);
        const CVec h_star = draw_complex_gaussian(inst_rng, n, 1.0);
        CVec y = j.mul(h_star);
        EstimatorState st;
        st.h_hat = CVec(n);
        st.eta = eta;
        st.guard_certified = cert.certified;
        LinearModel lm{j, y};
        std::vector<std::pair<double, double>> series;
        const double floor_mse = 1e-4;
        for (int t = 0; t < 60; ++t) {
            st = pdd_corrected_update(st, lm, CVec(), {}, 10.0, !cert.certified);
            series.emplace_back(static_cast<double>(t + 1),
                                (st.h_hat - h_star).norm_sq() + floor_mse);
        }
        const BoundFit fit = fit_theorem1_bound(series, cfg.channel.num_users,
                                                cfg.noma.n_pilot, 0.05, 10.0);
        report["theorem1"] = {{"c1", fit.c1},
                              {"gamma", fit.gamma},
                              {"c2", fit.c2},
                              {"c3", fit.c3},
                              {"fit_r2", fit.fit_r2},
                              {"exponential_certified", fit.exponential_certified}};

        // Pilot-length scaling from the fitted pilot constant.
        std::vector<int> grid;
        for (int np = 1; np <= 5000; ++np) grid.push_back(np);
        std::vector<double> log_k, log_n;
        for (int k : {2, 4, 8}) {
            const int n_star = optimal_pilot_length(std::max(fit.c2, 1.0), k, 0.01, grid);
            log_k.push_back(std::log(static_cast<double>(k)));
            log_n.push_back(std::log(static_cast<double>(n_star)));
        }
        const LineFit slope = fit_line(log_k, log_n);
        report["corollary1"] = {{"loglog_slope", slope.slope}};
    }

    report["theorem2"] = {{"bound", theorem2_tracking_bound(1.0, cfg.channel.velocity,
                                                            cfg.channel.carrier_wavelength,
                                                            cfg.channel.step_duration, 0.01,
                                                            1.0)}};

    // Measured NRMSE grid for the sample-size bound.
    {
        std::vector<NrmseGridPoint> grid;
        for (int t_len : {5, 10, 20}) {
            for (int s_count : {40, 80, 160}) {
                TransformerConfig tc = cfg.transformer;
                tc.seq_len = t_len;
                tc.d_model = 16;
                tc.n_layers = 1;
                tc.d_ff = 64;
                tc.d_out = 1;
                SeededRng mrng(cfg.seed, 700 + static_cast<std::uint64_t>(t_len));
                TransformerModel m(tc, mrng);
                SeededRng trng(cfg.seed, 701);
                ChannelConfig cc = cfg.channel;
                cc.time_steps = std::min(cfg.channel.time_steps, 400);
                const ChannelTrace trace = generate_trace(cc, trng);
                Dataset all = windows_from_trace(trace, t_len, 1, s_count + 60);
                std::vector<RMat> ws;
                for (const Sample& s : all) ws.push_back(s.window);
                m.standardizer() = Standardizer::fit(ws);
                m.freeze_backbone();
                Dataset fit_set(all.begin(),
                                all.begin() + std::min<std::ptrdiff_t>(
                                                  s_count, static_cast<std::ptrdiff_t>(all.size())));
                Dataset held(all.begin() + static_cast<std::ptrdiff_t>(fit_set.size()), all.end());
                m.transfer_fit(fit_set, 800, 0.05);
                std::vector<double> pred, act;
                for (const Sample& s : held) {
                    pred.push_back(m.forward(m.encode(s.window))[0]);
                    act.push_back(s.target[0]);
                }
                grid.push_back({t_len, s_count, nrmse(pred, act)});
            }
        }
        const Theorem3Fit t3 = theorem3_nrmse_bound(grid);
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : grid)
            points.push_back({{"t", p.t}, {"s", p.s}, {"nrmse", p.nrmse}});
        report["theorem3"] = {{"c", t3.c},
                              {"shape_violations", t3.shape_violations.size()},
                              {"grid", points}};
    }

    // BER-ratio shape vs the exponential gain term.
    {
        std::vector<double> log_ratio, delta_over_n0;
        nlohmann::json rows = nlohmann::json::array();
        for (double snr_db : {0.0, 4.0, 8.0, 12.0, 16.0}) {
            const double n0 = std::pow(10.0, -snr_db / 10.0);
            SeededRng sim_rng(cfg.seed, 800 + static_cast<std::uint64_t>(snr_db));
            int errs_base = 0, errs_pdd = 0, bits = 0;
            double gain_base = 0.0, gain_pdd = 0.0;
            const int n_sym = 4000;
            PowerAllocation pa{{1.0}};
            for (int i = 0; i < n_sym; ++i) {
                const cplx g = sim_rng.complex_gaussian(1.0);
                const cplx g_base = g + sim_rng.complex_gaussian(0.3);
                const cplx g_pdd = g + sim_rng.complex_gaussian(0.3 * n0);
                const int b0 = static_cast<int>(sim_rng.uniform_below(2));
                const int b1 = static_cast<int>(sim_rng.uniform_below(2));
                const cplx s = qpsk_modulate(b0, b1);
                const cplx y = g * s + sim_rng.complex_gaussian(n0);
                for (const auto& [gh, errs] :
                     {std::pair<cplx, int*>{g_base, &errs_base}, {g_pdd, &errs_pdd}}) {
                    SicResult sic = sic_decode(y, {gh}, pa, {0}, n0, nullptr);
                    int d0, d1;
                    qpsk_bits(sic.stages[0].decoded_symbol, d0, d1);
                    *errs += (d0 != b0) + (d1 != b1);
                }
                bits += 2;
                // Coherent combining gain achieved by each estimate.
                gain_base += std::norm(g) * std::pow(std::cos(std::arg(g) - std::arg(g_base)), 2);
                gain_pdd += std::norm(g) * std::pow(std::cos(std::arg(g) - std::arg(g_pdd)), 2);
            }
            const double ber_base = std::max(1, errs_base) / static_cast<double>(bits);
            const double ber_pdd = std::max(1, errs_pdd) / static_cast<double>(bits);
            const Lemma1Result lr = lemma1_ber_ratio(
                ber_base, ber_pdd, gain_pdd / n_sym, gain_base / n_sym, n0);
            log_ratio.push_back(std::log(lr.observed_ratio));
            delta_over_n0.push_back((gain_pdd - gain_base) / (n_sym * n0));
            rows.push_back({{"snr_db", snr_db},
                            {"observed_ratio", lr.observed_ratio},
                            {"predicted_shape", lr.predicted_shape}});
        }
        report["lemma1"] = {{"rows", rows},
                            {"rank_correlation", rank_correlation(log_ratio, delta_over_n0)}};
    }

    {
        std::vector<double> omegas;
        for (int i = 0; i <= 10; ++i) omegas.push_back(0.5 * i);
        const MobilityBoundCurve curve = mobility_bound_curve(1.0, 2.0, 3.0, omegas);
        nlohmann::json samples = nlohmann::json::array();
        for (const auto& [w, m] : curve.samples) samples.push_back({{"omega", w}, {"bound", m}});
        report["mobility_curve"] = samples;
    }

    auto out = aw.open("theory_report.json");
    out << report.dump(2);
    return (cfg.strict && !cert.certified) ? 1 : 0;
}

}  // namespace

ScenarioResult run_scenario(const std::string& scenario, const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    cfg.channel.validate();
    cfg.handover.validate();
    cfg.transformer.validate();

    ArtifactWriter aw;
    aw.dir = cfg.output_dir;
    fs::create_directories(aw.dir);

    int code = 0;
    if (scenario == "estimate") scenario_estimate(cfg, aw);
    else if (scenario == "train") scenario_train(cfg, aw);
    else if (scenario == "transfer") scenario_transfer(cfg, aw);
    else if (scenario == "handover-sweep") scenario_handover_sweep(cfg, aw);
    else if (scenario == "complexity-sweep") scenario_complexity_sweep(cfg, aw);
    else if (scenario == "theory-check") code = scenario_theory_check(cfg, aw);
    else throw ConfigError("unknown scenario '" + scenario + "'");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json manifest;
    manifest["scenario"] = scenario;
    manifest["config"] = nlohmann::json::parse(config_to_json(cfg));
    manifest["wall_clock_s"] = wall;
    manifest["version"] = "1.0";
    for (const std::string& name : aw.names)
        manifest["artifacts"][name] = file_checksum_hex((aw.dir / name).string());
    std::ofstream mf(aw.dir / "manifest.json");
    mf << manifest.dump(2);

    ScenarioResult res;
    res.exit_code = code;
    res.artifacts = aw.names;
    return res;
}

}  // namespace deepsic
