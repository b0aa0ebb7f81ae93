#include <cmath>
#include <stdexcept>

#include "raidrel/builder.hpp"

namespace raidrel::build {

ThreeStateDisk default_three_state() { return {{5.4668e-4, 1.058e-5, 3.39e-6}}; }

DetailedDisk default_detailed() {
  const dist::Weibull ttop{1.12, 461386, 0};
  const auto fits = dist::fit_phase3(dist::raw_moments(ttop, 3));
  DetailedDisk d;
  d.ttop = fits.first;
  d.ttld_rate = 1.0 / 9259;
  d.ttscr = dist::fit_erlang(3, dist::Weibull{3, 168, 6});
  d.ttr = dist::fit_erlang(3, dist::Weibull{2, 12, 6});
  return d;
}

RebuildSpec RebuildSpec::from_mean(double mean_hr, double uer_prob) {
  if (!(mean_hr > 0)) throw std::invalid_argument("rebuild mean must be > 0");
  return {1.0 / mean_hr, uer_prob};
}

RebuildSpec default_rebuild() { return RebuildSpec::from_mean(30.0, 0.004); }

namespace {
bool pos(double v) { return std::isfinite(v) && v > 0; }
}  // namespace

void validate(const DiskModelSpec& d) {
  if (const auto* e = std::get_if<ExponentialDisk>(&d)) {
    if (!(e->rate >= 0) || !std::isfinite(e->rate)) throw std::invalid_argument("disk rate must be >= 0");
  } else if (const auto* t = std::get_if<ThreeStateDisk>(&d)) {
    dist::validate(t->ph);
  } else {
    const auto& x = std::get<DetailedDisk>(d);
    dist::validate(x.ttop);
    if (!(x.ttld_rate >= 0) || !std::isfinite(x.ttld_rate)) throw std::invalid_argument("ttld_rate must be >= 0");
    dist::validate(x.ttscr);
    dist::validate(x.ttr);
    if (2 + 2 * x.ttscr.k + x.ttr.k > 250) throw std::invalid_argument("too many Erlang stages");
  }
}

void validate(const RebuildSpec& r) {
  if (!pos(r.rate)) throw std::invalid_argument("rebuild rate must be > 0");
  if (!(r.uer_prob >= 0 && r.uer_prob < 1)) throw std::invalid_argument("uer_prob must be in [0, 1)");
}

void validate(const CorrelationSpec& c) {
  if (!(c.p >= 0 && c.p <= 1)) throw std::invalid_argument("correlation p must be in [0, 1]");
}

DiskPhases disk_phases(const DiskModelSpec& d, const RebuildSpec& r) {
  validate(d);
  using K = DiskPhases::Kind;
  DiskPhases p;
  auto add = [&](std::string name, bool failed, bool latent) {
    p.names.push_back(std::move(name));
    p.failed.push_back(failed);
    p.latent.push_back(latent);
    return static_cast<std::uint8_t>(p.names.size() - 1);
  };
  auto move = [&](std::uint8_t a, std::uint8_t b, double rate, K k) {
    if (rate > 0) p.moves.push_back({a, b, rate, k});
  };

  if (const auto* e = std::get_if<ExponentialDisk>(&d)) {
    const auto up = add("Up", false, false);
    const auto down = add("Rebuild", true, false);
    move(up, down, e->rate, K::OpFailure);
    move(down, up, r.rate, K::RepairDone);
    return p;
  }
  if (const auto* t = std::get_if<ThreeStateDisk>(&d)) {
    const auto y = add("Young", false, false);
    const auto b = add("BurntIn", false, false);
    const auto down = add("Rebuild", true, false);
    move(y, b, t->ph.sigma, K::Internal);
    move(y, down, t->ph.alpha, K::OpFailure);
    move(b, down, t->ph.beta, K::OpFailure);
    move(down, y, r.rate, K::RepairDone);
    return p;
  }

  const auto& x = std::get<DetailedDisk>(d);
  const int ks = x.ttscr.k;
  const auto y = add("Young", false, false);
  const auto b = add("BurntIn", false, false);
  std::vector<std::uint8_t> yl, bl, rs;
  for (int i = 1; i <= ks; ++i) yl.push_back(add("YoungLSE" + std::to_string(i), false, true));
  for (int i = 1; i <= ks; ++i) bl.push_back(add("BurntInLSE" + std::to_string(i), false, true));
  for (int i = 1; i <= x.ttr.k; ++i) rs.push_back(add("Restore" + std::to_string(i), true, false));

  move(y, b, x.ttop.sigma, K::Internal);
  move(y, rs.front(), x.ttop.alpha, K::OpFailure);
  move(b, rs.front(), x.ttop.beta, K::OpFailure);
  move(y, yl.front(), x.ttld_rate, K::Internal);
  move(b, bl.front(), x.ttld_rate, K::Internal);
  for (int i = 0; i < ks; ++i) {
    move(yl[i], bl[i], x.ttop.sigma, K::Internal);
    if (x.scrub) {
      move(yl[i], i + 1 < ks ? yl[i + 1] : y, x.ttscr.lambda, K::Internal);
      move(bl[i], i + 1 < ks ? bl[i + 1] : b, x.ttscr.lambda, K::Internal);
    }
    if (x.op_failure_with_defect) {
      move(yl[i], rs.front(), x.ttop.alpha, K::OpFailure);
      move(bl[i], rs.front(), x.ttop.beta, K::OpFailure);
    }
  }
  for (std::size_t j = 0; j + 1 < rs.size(); ++j) move(rs[j], rs[j + 1], x.ttr.lambda, K::Internal);
  move(rs.back(), y, x.ttr.lambda, K::RepairDone);
  return p;
}

ctmc::Ctmc build_detailed_disk(const DiskModelSpec& d, FragmentMode mode) {
  if (!std::holds_alternative<DetailedDisk>(d)) throw std::invalid_argument("build_detailed_disk needs a detailed disk model");
  const DiskPhases p = disk_phases(d, RebuildSpec{});
  const std::size_t n = p.size();
  std::vector<ctmc::Transition> tr;
  std::map<std::string, std::vector<std::uint32_t>> labels;

  if (mode == FragmentMode::Renewal) {
    for (const auto& m : p.moves) tr.push_back({m.from, m.to, m.rate});
    for (std::uint32_t s = 0; s < n; ++s) {
      if (p.failed[s]) labels["Restoring"].push_back(s);
      if (p.latent[s]) labels["LatentDefect"].push_back(s);
    }
    std::vector<double> init(n, 0.0);
    init[p.initial] = 1.0;
    return ctmc::Ctmc(n, std::move(tr), std::move(init), std::move(labels));
  }

  // drop the restore phases; operational failure absorbs
  std::vector<std::int64_t> map(n, -1);
  std::uint32_t next = 0;
  for (std::size_t s = 0; s < n; ++s)
    if (!p.failed[s]) map[s] = next++;
  const std::uint32_t fail = next;
  for (const auto& m : p.moves) {
    if (p.failed[m.from]) continue;
    const auto to = m.kind == DiskPhases::Kind::OpFailure ? fail : static_cast<std::uint32_t>(map[m.to]);
    tr.push_back({static_cast<std::uint32_t>(map[m.from]), to, m.rate});
  }
  for (std::size_t s = 0; s < n; ++s)
    if (p.latent[s]) labels["LatentDefect"].push_back(static_cast<std::uint32_t>(map[s]));
  labels["OpFail"] = {fail};
  std::vector<double> init(fail + 1, 0.0);
  init[static_cast<std::size_t>(map[p.initial])] = 1.0;
  return ctmc::Ctmc(fail + 1, std::move(tr), std::move(init), std::move(labels));
}

}  // namespace raidrel::build
