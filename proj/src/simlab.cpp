#include "parcmi/simlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "parcmi/error.hpp"
#include "parcmi/parallel.hpp"
#include "parcmi/rng.hpp"
#include "parcmi/specfun.hpp"

namespace parcmi {

FamilySpec default_x_model() {
  FamilySpec s;
  s.family = Family::LogNormal;
  s.shape = 0.5;
  s.coefficients = {0.0, 0.05};
  return s;
}

void SimDesign::validate() const {
  if (n < 10) fail(ErrorKind::Config, "simulation design needs n >= 10");
  if (replicates < 1) fail(ErrorKind::Config, "simulation design needs replicates >= 1");
  if (B < 1) fail(ErrorKind::Config, "simulation design needs B >= 1");
  if (!(censor_rate > 0.0) || !std::isfinite(censor_rate))
    fail(ErrorKind::Config, "censoring rate must be positive and finite");
  if (outcome_beta.size() != 3) fail(ErrorKind::Config, "outcome_beta must have 3 entries");
  if (!(confidence > 0.0 && confidence < 1.0)) fail(ErrorKind::Config, "confidence must be in (0,1)");
  x_model.validate();
  if (x_model.covariate_count() != 1)
    fail(ErrorKind::Config, "the covariate model must have exactly one slope (for Z)");
}

Replicate generate_replicate(const SimDesign& design, std::size_t index) {
  design.validate();
  Rng rng = derive_stream(design.seed, index);
  Replicate out;
  out.data.covariate_names = {"z"};
  out.x.reserve(design.n);
  const auto& b = design.outcome_beta;
  for (std::size_t i = 0; i < design.n; ++i) {
    const double zv = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    const double z[1] = {zv};
    const double x = sample(resolve(design.x_model, z), rng);
    const double eps = specfun::normal_quantile(uniform01(rng));
    const double c = -std::log(uniform01(rng)) / design.censor_rate;
    const double y = b[0] + b[1] * x + b[2] * zv + eps;
    const bool observed = x <= c;
    out.data.add_row(y, observed ? x : c, observed ? 1 : 0, z);
    out.x.push_back(x);
  }
  return out;
}

namespace {

struct Estimate {
  double beta1, se1, lower, upper;
};

Estimate coefficient1(const OlsFit& f, double confidence) {
  const double se = std::sqrt(f.cov(1, 1));
  const double tq = specfun::student_t_quantile(0.5 + 0.5 * confidence, f.df());
  return {f.beta[1], se, f.beta[1] - tq * se, f.beta[1] + tq * se};
}

Estimate coefficient1(const PooledFit& f) {
  return {f.beta_bar[1], f.se[1], f.ci_lower[1], f.ci_upper[1]};
}

double sample_variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

MethodSummary summarize(const std::vector<double>& beta, const std::vector<double>& se,
                        const std::vector<bool>& covered, const std::vector<double>& runtime,
                        double truth) {
  MethodSummary s;
  s.used = beta.size();
  if (s.used == 0) return s;
  const double nu = static_cast<double>(s.used);
  const double mean_beta = std::accumulate(beta.begin(), beta.end(), 0.0) / nu;
  s.bias = mean_beta - truth;
  s.pct_bias = 100.0 * s.bias / truth;
  if (s.used > 1) s.ese = std::sqrt(sample_variance(beta));
  s.ase = std::accumulate(se.begin(), se.end(), 0.0) / nu;
  s.cp = static_cast<double>(std::count(covered.begin(), covered.end(), true)) / nu;
  if (!runtime.empty()) {
    s.runtime_mean = std::accumulate(runtime.begin(), runtime.end(), 0.0) / nu;
    s.runtime_median = median(runtime);
  }
  return s;
}

}  // namespace

SimResult run_cell(const SimDesign& design) {
  design.validate();
  SimResult result;
  result.design = design;
  result.records.resize(design.replicates);
  const double truth = design.true_beta1();

  parallel_for(design.replicates, design.workers, [&](std::size_t r) {
    ReplicateRecord& rec = result.records[r];
    rec.index = r;
    try {
      Replicate rep = generate_replicate(design, r);
      rec.censoring_fraction = static_cast<double>(rep.data.censored_count()) /
                               static_cast<double>(rep.data.size());
      Dataset full = rep.data;
      full.w = rep.x;
      std::fill(full.delta.begin(), full.delta.end(), 1);
      const Estimate fe = coefficient1(ols(full), design.confidence);
      rec.full_beta1 = fe.beta1;
      rec.full_se1 = fe.se1;

      ImputeOptions opts;
      opts.fit = design.fit;
      opts.condmean.strategy = design.strategy;
      const auto start = std::chrono::steady_clock::now();
      Estimate est{};
      if (design.B == 1) {
        est = coefficient1(ols(impute_single(rep.data, design.family_fit, opts)),
                           design.confidence);
      } else {
        MIConfig cfg;
        cfg.B = design.B;
        cfg.seed = splitmix64(design.seed ^ splitmix64(0x5bd1e995ULL + r));
        cfg.flavor = design.flavor;
        const auto imputations = impute_multiple(rep.data, design.family_fit, opts, cfg);
        std::vector<OlsFit> fits;
        fits.reserve(imputations.size());
        for (const auto& imp : imputations) fits.push_back(ols(imp));
        est = coefficient1(pool(fits, design.confidence));
      }
      rec.elapsed_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      rec.beta1 = est.beta1;
      rec.se1 = est.se1;
      rec.covered = est.lower <= truth && truth <= est.upper;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  });

  std::vector<double> fb, fs, mb, ms, rt;
  std::vector<bool> fc, mc;
  double cens = 0.0;
  for (const auto& rec : result.records) {
    if (!rec.ok()) {
      ++result.excluded;
      continue;
    }
    cens += rec.censoring_fraction;
    fb.push_back(rec.full_beta1);
    fs.push_back(rec.full_se1);
    mb.push_back(rec.beta1);
    ms.push_back(rec.se1);
    rt.push_back(rec.elapsed_seconds);
    mc.push_back(rec.covered);
    const double tq = specfun::student_t_quantile(0.5 + 0.5 * design.confidence,
                                                  static_cast<double>(design.n - 3));
    fc.push_back(std::fabs(rec.full_beta1 - truth) <= tq * rec.full_se1);
  }
  result.full = summarize(fb, fs, fc, {}, truth);
  result.method = summarize(mb, ms, mc, rt, truth);
  if (!mb.empty()) result.censoring_fraction = cens / static_cast<double>(mb.size());
  if (result.full.ese && result.method.ese) {
    result.full.re = 1.0;
    result.method.re = (*result.full.ese * *result.full.ese) /
                       (*result.method.ese * *result.method.ese);
  }
  return result;
}

SelectionResult run_selection_study(const SimDesign& design, std::span<const Family> candidates) {
  design.validate();
  if (candidates.empty()) fail(ErrorKind::Config, "selection study needs at least one candidate");
  SelectionResult out;
  out.candidates.assign(candidates.begin(), candidates.end());
  std::vector<int> aic_pick(design.replicates, -1), bic_pick(design.replicates, -1);
  std::vector<std::string> errors(design.replicates);

  parallel_for(design.replicates, design.workers, [&](std::size_t r) {
    try {
      const Replicate rep = generate_replicate(design, r);
      const ModelSelection sel =
          select_model(candidates, rep.data.censored_sample(), Criterion::AIC, design.fit);
      auto index_of = [&](Family f) {
        return static_cast<int>(std::find(candidates.begin(), candidates.end(), f) -
                                candidates.begin());
      };
      aic_pick[r] = index_of(sel.ranked.front().spec.family);
      const auto best_bic = std::min_element(
          sel.ranked.begin(), sel.ranked.end(), [](const auto& a, const auto& b) {
            if (a.bic != b.bic) return a.bic < b.bic;
            if (a.k != b.k) return a.k < b.k;
            return static_cast<int>(a.spec.family) < static_cast<int>(b.spec.family);
          });
      bic_pick[r] = index_of(best_bic->spec.family);
    } catch (const std::exception& e) {
      errors[r] = "replicate " + std::to_string(r) + ": " + e.what();
    }
  });

  out.aic_first.assign(candidates.size(), 0.0);
  out.bic_first.assign(candidates.size(), 0.0);
  for (std::size_t r = 0; r < design.replicates; ++r) {
    if (aic_pick[r] < 0) {
      ++out.excluded;
      out.errors.push_back(errors[r]);
      continue;
    }
    ++out.used;
    out.aic_first[static_cast<std::size_t>(aic_pick[r])] += 1.0;
    out.bic_first[static_cast<std::size_t>(bic_pick[r])] += 1.0;
  }
  if (out.used > 0)
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      out.aic_first[j] /= static_cast<double>(out.used);
      out.bic_first[j] /= static_cast<double>(out.used);
    }
  return out;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

std::string summary_csv_header() {
  return "label,n,censor_rate,B,family_true,family_fit,strategy,replicates,excluded,censoring,"
         "bias,pct_bias,ese,ase,cp,re,runtime_mean,runtime_median";
}

std::string summary_csv_row(const std::string& label, const SimResult& r) {
  const SimDesign& d = r.design;
  std::ostringstream os;
  os << label << ',' << d.n << ',' << num(d.censor_rate) << ',' << d.B << ','
     << to_string(d.family_true()) << ',' << to_string(d.family_fit) << ','
     << to_string(d.strategy) << ',' << d.replicates << ',' << r.excluded << ','
     << num(r.censoring_fraction) << ',' << num(r.method.bias) << ',' << num(r.method.pct_bias)
     << ',' << num(r.method.ese) << ',' << num(r.method.ase) << ',' << num(r.method.cp) << ','
     << num(r.method.re) << ',' << num(r.method.runtime_mean) << ','
     << num(r.method.runtime_median);
  return os.str();
}

std::string replicates_csv(const SimResult& result) {
  std::ostringstream os;
  os << "index,censoring_fraction,full_beta1,full_se1,beta1,se1,covered,elapsed_seconds,error\n";
  for (const auto& r : result.records) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << r.index << ',' << num(r.censoring_fraction) << ',' << num(r.full_beta1) << ','
       << num(r.full_se1) << ',' << num(r.beta1) << ',' << num(r.se1) << ','
       << (r.covered ? 1 : 0) << ',' << num(r.elapsed_seconds) << ',' << err << '\n';
  }
  return os.str();
}

}  // namespace parcmi
