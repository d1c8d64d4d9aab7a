#include <algorithm>
#include <cmath>
#include <numeric>

#include "anosovlab/rng.hpp"
#include "model.hpp"

namespace anosovlab {

using detail::Model;

std::string_view kind_name(SystemKind k) {
  switch (k) {
    case SystemKind::CatSuspension: return "CatSuspension";
    case SystemKind::BorelSmale: return "BorelSmale";
    case SystemKind::BorelSmalePerturbed: return "BorelSmalePerturbed";
    case SystemKind::ASL2Model: return "ASL2Model";
    case SystemKind::SL3Model: return "SL3Model";
  }
  return "?";
}

std::optional<SystemKind> parse_kind(std::string_view s) {
  for (auto k : {SystemKind::CatSuspension, SystemKind::BorelSmale, SystemKind::BorelSmalePerturbed,
                 SystemKind::ASL2Model, SystemKind::SL3Model})
    if (kind_name(k) == s) return k;
  return std::nullopt;
}

SystemSpec SystemSpec::cat(std::array<int, 4> m) {
  SystemSpec s;
  s.kind = SystemKind::CatSuspension;
  s.matrix = m;
  return s;
}

SystemSpec SystemSpec::borel_smale(int a, int b, double lambda) {
  SystemSpec s;
  s.kind = SystemKind::BorelSmale;
  s.a = a;
  s.b = b;
  s.lambda = lambda;
  return s;
}

SystemSpec SystemSpec::borel_smale_perturbed(double eps, int a, int b, double lambda) {
  SystemSpec s = borel_smale(a, b, lambda);
  s.kind = SystemKind::BorelSmalePerturbed;
  s.eps_pert = eps;
  return s;
}

SystemSpec SystemSpec::asl2() {
  SystemSpec s;
  s.kind = SystemKind::ASL2Model;
  return s;
}

SystemSpec SystemSpec::sl3() {
  SystemSpec s;
  s.kind = SystemKind::SL3Model;
  return s;
}

System::System(const SystemSpec& spec) : spec_(spec) {
  switch (spec.kind) {
    case SystemKind::CatSuspension: model_ = detail::make_cat(spec); break;
    case SystemKind::BorelSmale: {
      SystemSpec s = spec;
      s.eps_pert = 0.0;
      spec_ = s;
      model_ = detail::make_borel_smale(s);
      break;
    }
    case SystemKind::BorelSmalePerturbed:
      if (spec.eps_pert <= 0.0)
        fail(ErrorCode::InvalidParams, "BorelSmalePerturbed needs eps_pert > 0");
      model_ = detail::make_borel_smale(spec);
      break;
    case SystemKind::ASL2Model: model_ = detail::make_asl2(spec); break;
    case SystemKind::SL3Model: model_ = detail::make_sl3(spec); break;
  }
  if (!(spec.chart_bound > 0.0)) fail(ErrorCode::InvalidParams, "chart_bound must be positive");

  const std::vector<double> w = model_->frame_weights();
  const Mat ev = model_->frame_eigenvectors();
  std::vector<int> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return w[static_cast<std::size_t>(i)] > w[static_cast<std::size_t>(j)];
  });
  ref_frame_.resize(dim(), dim());
  for (int k = 0; k < dim(); ++k) {
    ref_frame_.col(k) = ev.col(order[static_cast<std::size_t>(k)]);
    ref_exponents_.push_back(w[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
  }
  if (spec_.kind != SystemKind::BorelSmalePerturbed) exact_ = ref_exponents_;
}

System::~System() = default;
System::System(const System&) = default;
System& System::operator=(const System&) = default;
System::System(System&&) noexcept = default;
System& System::operator=(System&&) noexcept = default;

int System::dim() const { return model_->dim(); }
int System::coord_dim() const { return model_->coord_dim(); }
bool System::quotiented() const { return model_->quotiented(); }
bool System::homogeneous() const { return model_->homogeneous(); }
double System::chart_radius() const { return model_->chart_radius(); }

BlockDims System::flow_dim_split() const {
  BlockDims d;
  const auto blocks = reference_blocks();
  for (const auto& blk : blocks) {
    const double w = ref_exponents_[static_cast<std::size_t>(blk.front())];
    const int n = static_cast<int>(blk.size());
    if (w < 0) d.stable += n;
    else if (w == 0) d.neutral += n;
    else d.unstable += n;
  }
  d.strong_unstable = static_cast<int>(blocks.front().size());
  d.unstable -= d.strong_unstable;
  return d;
}

std::vector<std::vector<int>> System::reference_blocks() const {
  std::vector<std::vector<int>> out;
  for (int k = 0; k < dim(); ++k) {
    const double w = ref_exponents_[static_cast<std::size_t>(k)];
    if (!out.empty() &&
        std::abs(ref_exponents_[static_cast<std::size_t>(out.back().front())] - w) < 1e-12)
      out.back().push_back(k);
    else
      out.push_back({k});
  }
  return out;
}

Mat System::leaf_directions(LeafKind kind) const {
  std::vector<int> cols;
  const auto blocks = reference_blocks();
  for (int k = 0; k < dim(); ++k) {
    const double w = ref_exponents_[static_cast<std::size_t>(k)];
    bool take = false;
    switch (kind) {
      case LeafKind::Stable: take = w < 0; break;
      case LeafKind::CenterStable: take = w <= 0; break;
      case LeafKind::Unstable: take = w > 0; break;
      case LeafKind::StrongUnstable:
        take = std::find(blocks.front().begin(), blocks.front().end(), k) != blocks.front().end();
        break;
    }
    if (take) cols.push_back(k);
  }
  Mat m(dim(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    m.col(static_cast<Eigen::Index>(j)) = ref_frame_.col(cols[j]);
  return m;
}

Point System::check(Vec c, bool reduced) const {
  if (!c.allFinite()) fail(ErrorCode::NonFinite, "non-finite coordinates");
  if (!model_->in_chart(c))
    fail(ErrorCode::DegenerateOrbit, "orbit left the configured chart");
  return Point{std::move(c), reduced};
}

Point System::flow(const Point& x, double t) const {
  if (!std::isfinite(t)) fail(ErrorCode::NonFinite, "non-finite time");
  if (t == 0.0) return x;
  if (!quotiented()) return check(model_->flow(x.coords, t), false);
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(t))));
  const double dt = t / n;
  Vec c = x.coords;
  for (int i = 0; i < n; ++i) {
    c = model_->reduce(model_->flow(c, dt));
    if (!c.allFinite()) fail(ErrorCode::NonFinite, "flow produced non-finite coordinates");
  }
  return check(std::move(c), true);
}

Point System::flow_lift(const Point& x, double t) const {
  if (t == 0.0) return Point{x.coords, false};
  return check(model_->flow(x.coords, t), false);
}

Mat System::tangent_flow(const Point& x, double t) const {
  if (homogeneous()) {
    Mat m = model_->tangent(x.coords, t);
    if (!m.allFinite()) fail(ErrorCode::NonFinite, "tangent flow overflow");
    return m;
  }
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(t))));
  const double dt = t / n;
  Mat m = Mat::Identity(dim(), dim());
  if (t == 0.0) return m;
  Vec c = quotiented() ? model_->reduce(x.coords) : x.coords;
  for (int i = 0; i < n; ++i) {
    m = model_->tangent(c, dt) * m;
    c = model_->flow(c, dt);
    if (quotiented()) c = model_->reduce(c);
  }
  if (!m.allFinite()) fail(ErrorCode::NonFinite, "tangent flow overflow");
  return m;
}

Point System::lattice_reduce(const Point& x) const {
  if (!quotiented()) fail(ErrorCode::Unsupported, std::string(kind_name(kind())) + " has no lattice");
  return check(model_->reduce(x.coords), true);
}

Point System::exp_at(const Point& x, const Vec& v) const {
  return check(model_->exp_left(v, x.coords), false);
}

Vec System::displacement(const Point& x, const Point& y) const {
  return model_->rel(x.coords, y.coords);
}

std::pair<Point, Vec> System::transport(const Point& x, const Vec& v, double t) const {
  if (homogeneous()) {
    Vec d = model_->conjugate(v, t);
    if (!d.allFinite()) fail(ErrorCode::NonFinite, "transport overflow");
    return {flow(x, t), std::move(d)};
  }
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(t))));
  const double dt = t / n;
  Vec p = quotiented() ? model_->reduce(x.coords) : x.coords;
  Vec d = v;
  for (int i = 0; i < n && t != 0.0; ++i) {
    const Vec q = model_->exp_left(d, p);
    const Vec p1 = model_->flow(p, dt);
    const Vec q1 = model_->flow(q, dt);
    d = model_->rel(p1, q1);
    p = quotiented() ? model_->reduce(p1) : p1;
    if (!d.allFinite()) fail(ErrorCode::NonFinite, "transport overflow");
  }
  return {check(std::move(p), quotiented()), std::move(d)};
}

Vec System::flow_vector(const Point& x) const { return model_->generator(x.coords); }

Point System::base_point() const {
  Vec c = model_->base();
  return Point{c, quotiented()};
}

Point System::identity_point() const { return Point{model_->identity(), false}; }

Point System::random_point(std::uint64_t seed) const {
  Rng rng(seed);
  if (quotiented()) {
    const auto per = model_->periodic();
    Vec f(coord_dim());
    for (int i = 0; i < coord_dim(); ++i) f[i] = rng.uniform();
    return Point{model_->from_fundamental(f), true};
  }
  Vec v = rng.normal_vector(dim());
  v *= 0.3 / std::max(1.0, v.norm());
  return Point{model_->exp_left(v, model_->identity()), false};
}

Vec System::fundamental_coords(const Point& x) const { return model_->fundamental(x.coords); }
Point System::from_fundamental(const Vec& w) const {
  return check(model_->from_fundamental(w), true);
}
std::vector<int> System::periodic_coords() const { return model_->periodic(); }

System make_system(const SystemSpec& spec) { return System(spec); }

}  // namespace anosovlab
