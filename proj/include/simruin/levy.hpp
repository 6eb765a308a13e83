#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "simruin/numerics.hpp"

namespace simruin::levy {

enum class SpectralSign { positive, negative };
enum class ModelKind { brownian, gamma, stable, perturbed_gamma };

/// One-sided Levy process Z with Z(0) = 0 and a density for every t > 0.
class LevyModel {
public:
    virtual ~LevyModel() = default;

    virtual ModelKind kind() const = 0;
    virtual SpectralSign spectral_sign() const = 0;
    virtual std::string describe() const = 0;

    /// Density of Z(t) at u.
    virtual double density(double u, double t) const = 0;
    /// P(Z(t) > z).
    virtual double tail(double z, double t) const = 0;
    /// E min(0, Z(s) - c s); never positive.
    virtual double expected_min(double c, double s) const = 0;
    /// Integral of g(w) density(w, t) over (lo, hi). hi may be +inf except for
    /// heavy right tails (stable), where it must be finite.
    virtual numerics::QuadratureResult expect(const numerics::Integrand& g, double t, double lo, double hi,
                                              const numerics::QuadratureSpec& spec) const = 0;
};

class BrownianModel final : public LevyModel {
public:
    explicit BrownianModel(SpectralSign sign = SpectralSign::positive) : sign_(sign) {}
    ModelKind kind() const override { return ModelKind::brownian; }
    SpectralSign spectral_sign() const override { return sign_; }
    std::string describe() const override;
    double density(double u, double t) const override;
    double tail(double z, double t) const override;
    double expected_min(double c, double s) const override;
    numerics::QuadratureResult expect(const numerics::Integrand& g, double t, double lo, double hi,
                                      const numerics::QuadratureSpec& spec) const override;

private:
    SpectralSign sign_;
};

/// Gamma subordinator: Z(t) ~ Gamma(shape t, rate lambda).
class GammaModel final : public LevyModel {
public:
    explicit GammaModel(double lambda);
    double lambda() const noexcept { return lambda_; }
    ModelKind kind() const override { return ModelKind::gamma; }
    SpectralSign spectral_sign() const override { return SpectralSign::positive; }
    std::string describe() const override;
    double density(double u, double t) const override;
    double tail(double z, double t) const override;
    double expected_min(double c, double s) const override;
    numerics::QuadratureResult expect(const numerics::Integrand& g, double t, double lo, double hi,
                                      const numerics::QuadratureSpec& spec) const override;

private:
    double lambda_;
};

/// Totally right-skewed alpha-stable motion, 1 < alpha < 2, unit scale,
/// E exp(i k Z(1)) = exp(-|k|^alpha (1 - i sign(k) tan(pi alpha / 2))).
class StableModel final : public LevyModel {
public:
    explicit StableModel(double alpha, numerics::QuadratureSpec inner = default_inner());
    double alpha() const noexcept { return alpha_; }
    ModelKind kind() const override { return ModelKind::stable; }
    SpectralSign spectral_sign() const override { return SpectralSign::positive; }
    std::string describe() const override;
    double density(double u, double t) const override;
    double tail(double z, double t) const override;
    double expected_min(double c, double s) const override;
    numerics::QuadratureResult expect(const numerics::Integrand& g, double t, double lo, double hi,
                                      const numerics::QuadratureSpec& spec) const override;

    double unit_density(double x) const;
    double unit_cdf(double x) const;
    /// E min(0, Z(1) - k), uncached.
    double unit_shortfall(double k) const;
    /// Point below which Z(1) has negligible mass.
    double left_cut() const noexcept { return left_cut_; }

    static numerics::QuadratureSpec default_inner();

private:
    double alpha_;
    double tan_;
    double x_max_;
    double left_cut_;
    numerics::QuadratureSpec inner_;
    // By self-similarity E min(0, Z(s) - cs) = s^(1/alpha) g(c s^(1 - 1/alpha)),
    // so one table of g serves every (c, s).
    mutable std::once_flag table_once_;
    mutable numerics::MonotoneCubic shortfall_table_;
};

/// Gamma subordinator plus sigma times an independent Brownian motion.
class PerturbedGammaModel final : public LevyModel {
public:
    PerturbedGammaModel(double lambda, double sigma, numerics::QuadratureSpec inner = StableModel::default_inner());
    double lambda() const noexcept { return lambda_; }
    double sigma() const noexcept { return sigma_; }
    ModelKind kind() const override { return ModelKind::perturbed_gamma; }
    SpectralSign spectral_sign() const override { return SpectralSign::positive; }
    std::string describe() const override;
    double density(double u, double t) const override;
    double tail(double z, double t) const override;
    double expected_min(double c, double s) const override;
    numerics::QuadratureResult expect(const numerics::Integrand& g, double t, double lo, double hi,
                                      const numerics::QuadratureSpec& spec) const override;

private:
    // Integral of h(y) against the Gamma(t, lambda) density, power-substituted
    // so the y^(t-1) spike at 0 disappears; `kinks` are extra breakpoints in y.
    numerics::QuadratureResult gamma_average(const numerics::Integrand& h, double t, std::initializer_list<double> kinks,
                                             const numerics::QuadratureSpec& spec) const;

    GammaModel gamma_;
    double lambda_;
    double sigma_;
    numerics::QuadratureSpec inner_;
};

enum class BarrierCase { first_dominates, crossing, second_dominates };

/// Ruin of both lines x + c1 t and y + c2 t by the same path on [0, T].
struct TwoLineBarrier {
    double c1 = 1.0;
    double c2 = 0.0;
    double x = 0.0;
    double y = 0.0;
    double T = 1.0;

    /// Throws DegenerateDrift for c1 == c2 and InvalidInput for bad capitals.
    void validate() const;
    /// The same event with c1 > c2 (the pairs are swapped when c1 < c2).
    TwoLineBarrier oriented() const;
    double delta() const { return c1 - c2; }
    BarrierCase classify() const;
    /// Time at which the two lines cross.
    double xi() const { return (y - x) / delta(); }
};

const char* case_name(BarrierCase c);

/// P(sup_{t<=T} Z(t) - c t > u) for spectrally positive Z.
double L_functional(const LevyModel& model, double c, double T, double u, const numerics::QuadratureSpec& spec = {});

/// Same probability for spectrally negative Z from the first-passage density
/// u p(u + c s, s) / s.
double kendall_ruin(const LevyModel& model, double c, double T, double u, const numerics::QuadratureSpec& spec = {});

struct LevyResult {
    double probability;
    BarrierCase branch;
    double xi;  // crossing time; NaN outside the crossing case
};

LevyResult psi_levy(const LevyModel& model, const TwoLineBarrier& barrier, const numerics::QuadratureSpec& spec = {});

/// Gamma closed form: upper incomplete gamma head plus the double integral.
double gamma_L_closed(double lambda, double c, double T, double u, const numerics::QuadratureSpec& spec = {});

double stable_density(double alpha, double u, double t, const numerics::QuadratureSpec& spec = {});
double perturbed_gamma_density(double lambda, double sigma, double u, double t,
                               const numerics::QuadratureSpec& spec = {});

std::unique_ptr<LevyModel> make_model(ModelKind kind, double lambda, double alpha, double sigma,
                                      SpectralSign sign = SpectralSign::positive);
ModelKind parse_model_kind(const std::string& name);
const char* model_kind_name(ModelKind kind);

}  // namespace simruin::levy
