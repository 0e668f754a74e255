#include "pottsmix/contour.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>
#include <thread>

#include "pottsmix/errors.hpp"
#include "pottsmix/logsum.hpp"
#include "pottsmix/union_find.hpp"

namespace pottsmix {

bool SurfacePiece::is_contour() const {
  return std::all_of(winding.begin(), winding.end(), [](auto w) { return w == 0; });
}

std::string omega_class_name(OmegaClass c) {
  switch (c) {
    case OmegaClass::Ord: return "ord";
    case OmegaClass::Dis: return "dis";
    case OmegaClass::Tun: return "tun";
  }
  return "?";
}

namespace {

std::string ext_rule_name(ExtRule r) {
  switch (r) {
    case ExtRule::FlatInterface: return "flat_interface";
    case ExtRule::LargerVolume: return "larger_volume";
    case ExtRule::Origin: return "origin";
  }
  return "?";
}

}  // namespace

ContourGeometry::ContourGeometry(TorusSpec spec) : torus_(spec), grid_(spec) {
  const int d = grid_.dim();
  const std::size_t n = grid_.cell_count();
  cube_edges_.resize(n);
  std::vector<int> y(d), x(d);
  for (std::uint32_t c = 0; c < n; ++c) {
    grid_.decode(c, y);
    std::vector<int> odd;
    for (int i = 0; i < d; ++i) {
      x[i] = y[i] / 2;
      if (y[i] & 1) odd.push_back(i);
    }
    Vertex base = torus_.vertex(x);
    auto& list = cube_edges_[c];
    if (odd.empty()) {
      auto inc = torus_.graph().incident_edges(base);
      list.assign(inc.begin(), inc.end());
      continue;
    }
    const std::size_t k = odd.size();
    for (std::size_t a = 0; a < k; ++a) {
      for (std::uint32_t bits = 0; bits < (1u << k); ++bits) {
        if (bits & (1u << a)) continue;
        std::vector<int> corner = x;
        for (std::size_t b = 0; b < k; ++b)
          if (bits & (1u << b)) corner[odd[b]] += 1;
        list.push_back(torus_.edge_at(torus_.vertex(corner), odd[a]));
      }
    }
    std::sort(list.begin(), list.end());
  }
  crosses_edge_.assign(n * d, 0);
  on_base_loop_.assign(n * d, 0);
  for (std::uint32_t c = 0; c < n; ++c) {
    grid_.decode(c, y);
    for (int i = 0; i < d; ++i) {
      bool even = true, zero = true;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        even = even && (y[j] % 2 == 0);
        zero = zero && (y[j] == 0);
      }
      crosses_edge_[c * d + i] = even;
      on_base_loop_[c * d + i] = zero;
    }
  }
}

bool ContourGeometry::facets_touch(std::uint32_t f, std::uint32_t g) const {
  const int d = dim();
  const int circ = 2 * grid_.side();  // 4L in scaled units
  const std::uint32_t cf = facet_low(f), cg = facet_low(g);
  const int df = facet_dir(f), dg = facet_dir(g);
  for (int k = 0; k < d; ++k) {
    int yf = grid_.coord(cf, k), yg = grid_.coord(cg, k);
    int center_f = k == df ? 2 * yf + 1 : 2 * yf;
    int center_g = k == dg ? 2 * yg + 1 : 2 * yg;
    int reach = (k == df ? 0 : 1) + (k == dg ? 0 : 1);
    int delta = std::abs(center_f - center_g) % circ;
    delta = std::min(delta, circ - delta);
    if (delta > reach) return false;
  }
  return true;
}

std::vector<std::uint32_t> ContourGeometry::cells_touching_facet(std::uint32_t f) const {
  const int d = dim();
  const std::uint32_t low = facet_low(f);
  const int dir = facet_dir(f);
  std::vector<std::uint32_t> out{low};
  // Grow the block one coordinate at a time.
  for (int k = 0; k < d; ++k) {
    std::vector<std::uint32_t> next;
    for (auto c : out) {
      if (k == dir) {
        next.push_back(c);
        next.push_back(grid_.step(c, k, +1));
      } else {
        next.push_back(grid_.step(c, k, -1));
        next.push_back(c);
        next.push_back(grid_.step(c, k, +1));
      }
    }
    out.swap(next);
  }
  return out;
}

HalfCellSet fatten(const ContourGeometry& geo, const EdgeConfig& a) {
  const auto& grid = geo.grid();
  HalfCellSet cells(geo.cell_count());
  for (std::uint32_t c = 0; c < geo.cell_count(); ++c) {
    const auto& req = geo.cube_edges(c);
    bool in;
    if (grid.is_vertex_cell(c)) {
      in = std::any_of(req.begin(), req.end(), [&](auto e) { return a.test(e); });
    } else {
      in = std::all_of(req.begin(), req.end(), [&](auto e) { return a.test(e); });
    }
    if (in) cells.set(c);
  }
  return cells;
}

std::vector<SurfacePiece> boundary_components(const ContourGeometry& geo, const HalfCellSet& cells) {
  const auto& grid = geo.grid();
  const int d = geo.dim();
  const std::size_t n = geo.cell_count(), nf = geo.facet_count();
  std::vector<char> boundary(nf, 0);
  for (std::uint32_t c = 0; c < n; ++c)
    for (int i = 0; i < d; ++i)
      if (cells.test(c) != cells.test(grid.step(c, i, +1))) boundary[c * d + i] = 1;

  UnionFind uf(nf);
  for (std::uint32_t c = 0; c < n; ++c) {
    for (int i = 0; i < d; ++i) {
      const std::uint32_t ci = grid.step(c, i, +1);
      for (int j = i + 1; j < d; ++j) {
        const std::uint32_t cj = grid.step(c, j, +1);
        const std::uint32_t around[4] = {c * d + i, ci * d + j, cj * d + i, c * d + j};
        std::uint32_t hit[4];
        int count = 0;
        for (auto f : around)
          if (boundary[f]) hit[count++] = f;
        if (count == 2) {
          uf.unite(hit[0], hit[1]);
        } else if (count != 0) {
          throw ConsistencyError("boundary not regular: " + std::to_string(count) +
                                 " boundary facets around a ridge at cell " + std::to_string(c));
        }
      }
    }
  }

  std::vector<long> piece_of(nf, -1);
  std::vector<SurfacePiece> pieces;
  for (std::uint32_t f = 0; f < nf; ++f) {
    if (!boundary[f]) continue;
    auto root = uf.find(f);
    if (piece_of[root] < 0) {
      piece_of[root] = static_cast<long>(pieces.size());
      pieces.emplace_back();
    }
    auto& p = pieces[piece_of[root]];
    p.facets.push_back(f);
    p.low_inside.push_back(cells.test(geo.facet_low(f)));
    if (geo.facet_crosses_edge(f)) ++p.norm;
  }
  for (auto& p : pieces) p.winding = winding_vector(geo, p);
  return pieces;
}

std::vector<std::uint8_t> winding_vector(const ContourGeometry& geo, const SurfacePiece& piece) {
  std::vector<std::uint8_t> w(geo.dim(), 0);
  for (auto f : piece.facets)
    if (geo.facet_on_base_loop(f)) w[geo.facet_dir(f)] ^= 1;
  return w;
}

std::pair<std::vector<std::uint32_t>, std::uint32_t> cell_components(const ContourGeometry& geo,
                                                                     const std::vector<char>& walls) {
  const auto& grid = geo.grid();
  const int d = geo.dim();
  const std::size_t n = geo.cell_count();
  constexpr std::uint32_t kUnset = ~0u;
  std::vector<std::uint32_t> label(n, kUnset);
  std::uint32_t next = 0;
  std::vector<std::uint32_t> stack;
  for (std::uint32_t start = 0; start < n; ++start) {
    if (label[start] != kUnset) continue;
    label[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      auto c = stack.back();
      stack.pop_back();
      for (int i = 0; i < d; ++i) {
        auto up = grid.step(c, i, +1);
        if (!walls[c * d + i] && label[up] == kUnset) {
          label[up] = next;
          stack.push_back(up);
        }
        auto down = grid.step(c, i, -1);
        if (!walls[down * d + i] && label[down] == kUnset) {
          label[down] = next;
          stack.push_back(down);
        }
      }
    }
    ++next;
  }
  return {std::move(label), next};
}

std::size_t vertex_cells_in(const ContourGeometry& geo, const HalfCellSet& cells) {
  std::size_t k = 0;
  for (std::uint32_t c = 0; c < geo.cell_count(); ++c)
    if (cells.test(c) && geo.grid().is_vertex_cell(c)) ++k;
  return k;
}

ContourSides interior_exterior(const ContourGeometry& geo, const SurfacePiece& contour) {
  if (!contour.is_contour()) throw InvalidArgument("interior_exterior needs a contour (zero winding)");
  const auto& grid = geo.grid();
  const int d = geo.dim();
  const int side = grid.side();
  std::vector<char> walls(geo.facet_count(), 0);
  for (auto f : contour.facets) walls[f] = 1;
  auto [label, count] = cell_components(geo, walls);
  if (count != 2)
    throw ConsistencyError("complement of a contour has " + std::to_string(count) + " components, expected 2");

  std::uint32_t ext = 0;
  ContourSides out;
  // Rule 1: a flat interface {y_i = m | m+1} that no facet of the contour touches.
  std::vector<std::vector<char>> blocked(d, std::vector<char>(side, 0));
  for (auto f : contour.facets) {
    const auto low = geo.facet_low(f);
    const int k = geo.facet_dir(f);
    for (int i = 0; i < d; ++i) {
      int yi = grid.coord(low, i);
      blocked[i][yi] = 1;
      if (i != k) blocked[i][(yi - 1 + side) % side] = 1;
    }
  }
  long flat_label = -1;
  std::vector<int> y(d, 0);
  for (int i = 0; i < d; ++i)
    for (int m = 0; m < side; ++m) {
      if (blocked[i][m]) continue;
      std::fill(y.begin(), y.end(), 0);
      y[i] = m;
      long l = label[grid.encode(y)];
      if (flat_label >= 0 && l != flat_label)
        throw ConsistencyError("compatible flat interfaces lie in different components of a contour complement");
      flat_label = l;
    }
  if (flat_label >= 0) {
    ext = static_cast<std::uint32_t>(flat_label);
    out.rule = ExtRule::FlatInterface;
  } else {
    std::size_t volume[2] = {0, 0};
    for (std::uint32_t c = 0; c < geo.cell_count(); ++c)
      if (grid.is_vertex_cell(c)) ++volume[label[c]];
    if (volume[0] != volume[1]) {
      ext = volume[0] > volume[1] ? 0 : 1;
      out.rule = ExtRule::LargerVolume;
    } else {
      ext = label[0];
      out.rule = ExtRule::Origin;
    }
  }
  out.interior = HalfCellSet(geo.cell_count());
  out.exterior = HalfCellSet(geo.cell_count());
  for (std::uint32_t c = 0; c < geo.cell_count(); ++c) (label[c] == ext ? out.exterior : out.interior).set(c);
  return out;
}

ContourDecomposition classify(const ContourGeometry& geo, const EdgeConfig& a) {
  ContourDecomposition dec;
  dec.spec = geo.torus().spec();
  auto cells = fatten(geo, a);
  dec.pieces = boundary_components(geo, cells);
  for (std::size_t k = 0; k < dec.pieces.size(); ++k)
    (dec.pieces[k].is_contour() ? dec.contours : dec.interfaces).push_back(k);
  dec.ext_gamma = HalfCellSet::all(geo.cell_count());
  for (auto k : dec.contours) {
    dec.sides.push_back(interior_exterior(geo, dec.pieces[k]));
    const auto& ext = dec.sides.back().exterior;
    for (std::uint32_t c = 0; c < geo.cell_count(); ++c)
      if (!ext.test(c)) dec.ext_gamma.reset(c);
  }
  dec.empty_ordered = dec.pieces.empty() && cells.test(0);
  if (!dec.interfaces.empty()) {
    dec.omega = OmegaClass::Tun;
  } else {
    if (dec.ext_gamma.none()) throw ConsistencyError("common exterior of the contours is empty");
    bool all_in = dec.ext_gamma.is_subset_of(cells);
    bool all_out = dec.ext_gamma.is_subset_of(cells.complement());
    if (all_in == all_out) throw ConsistencyError("common exterior is split between V(A) and its complement");
    dec.omega = all_in ? OmegaClass::Ord : OmegaClass::Dis;
  }
  return dec;
}

namespace {

struct Labelling {
  std::vector<std::uint32_t> component;
  std::vector<int> ordered;  // per component: 1 ordered, 0 disordered
};

Labelling label_components(const ContourGeometry& geo, const ContourDecomposition& dec) {
  std::vector<char> walls(geo.facet_count(), 0);
  for (const auto& p : dec.pieces)
    for (auto f : p.facets) walls[f] = 1;
  auto [label, count] = cell_components(geo, walls);
  Labelling out{std::move(label), std::vector<int>(count, -1)};
  if (dec.pieces.empty()) {
    std::fill(out.ordered.begin(), out.ordered.end(), dec.empty_ordered ? 1 : 0);
    return out;
  }
  auto assign = [&](std::uint32_t comp, int value) {
    if (out.ordered[comp] >= 0 && out.ordered[comp] != value)
      throw InvalidArgument("labels do not match: a region is both ordered and disordered");
    out.ordered[comp] = value;
  };
  for (const auto& p : dec.pieces) {
    for (std::size_t k = 0; k < p.facets.size(); ++k) {
      auto f = p.facets[k];
      int low = p.low_inside[k] ? 1 : 0;
      assign(out.component[geo.facet_low(f)], low);
      assign(out.component[geo.facet_high(f)], 1 - low);
    }
  }
  for (int v : out.ordered)
    if (v < 0) throw ConsistencyError("a region has no bounding piece to label it");
  return out;
}

}  // namespace

HalfCellSet ordered_cells(const ContourGeometry& geo, const ContourDecomposition& dec) {
  auto lab = label_components(geo, dec);
  HalfCellSet cells(geo.cell_count());
  for (std::uint32_t c = 0; c < geo.cell_count(); ++c)
    if (lab.ordered[lab.component[c]]) cells.set(c);
  return cells;
}

double log_weight_factorized(const ModelParams& m, const ContourGeometry& geo, const ContourDecomposition& dec) {
  auto lab = label_components(geo, dec);
  const int d = geo.dim();
  std::size_t ordered_regions = std::count(lab.ordered.begin(), lab.ordered.end(), 1);
  std::size_t n_ord = 0, n_dis = 0;
  for (std::uint32_t c = 0; c < geo.cell_count(); ++c) {
    if (!geo.grid().is_vertex_cell(c)) continue;
    (lab.ordered[lab.component[c]] ? n_ord : n_dis)++;
  }
  std::size_t norm = 0;
  for (const auto& p : dec.pieces) norm += p.norm;
  return static_cast<double>(ordered_regions) * std::log(static_cast<double>(m.q)) -
         m.e_dis(d) * static_cast<double>(n_dis) - m.e_ord(d) * static_cast<double>(n_ord) -
         m.kappa() * static_cast<double>(norm);
}

EdgeConfig reconstruct(const ContourGeometry& geo, const ContourDecomposition& dec) {
  auto cells = ordered_cells(geo, dec);
  const auto& g = geo.torus().graph();
  EdgeConfig a(g.edge_count());
  for (std::uint32_t e = 0; e < g.edge_count(); ++e)
    if (cells.test(geo.grid().edge_cell(geo.torus(), e))) a.set(e);
  return a;
}

bool pieces_compatible(const ContourGeometry& geo, const SurfacePiece& a, const SurfacePiece& b) {
  for (auto f : a.facets)
    for (auto g : b.facets)
      if (geo.facets_touch(f, g)) return false;
  return true;
}

DiameterReport diameter(const ContourGeometry& geo, const SurfacePiece& contour) {
  const int d = geo.dim();
  const int side = geo.grid().side();
  std::vector<std::vector<char>> hit(d, std::vector<char>(side / 2, 0));
  for (auto f : contour.facets) {
    const auto low = geo.facet_low(f);
    const int k = geo.facet_dir(f);
    for (int i = 0; i < d; ++i) {
      if (i == k) continue;
      int yi = geo.grid().coord(low, i);
      if (yi % 2 == 0) hit[i][yi / 2] = 1;
    }
  }
  DiameterReport r;
  for (int i = 0; i < d; ++i) {
    r.extent.push_back(static_cast<std::size_t>(std::count(hit[i].begin(), hit[i].end(), 1)));
    r.diam = std::max(r.diam, r.extent.back());
  }
  return r;
}

IsoReport iso_check(const ContourGeometry& geo, const SurfacePiece& contour, const HalfCellSet& interior) {
  IsoReport r;
  r.norm = contour.norm;
  r.diam = diameter(geo, contour).diam;
  r.interior_vertices = vertex_cells_in(geo, interior);
  r.norm_vs_diam = r.norm >= 2 * r.diam;
  r.volume_vs_norm = 2 * r.interior_vertices <= r.norm * r.diam;
  return r;
}

OmegaCensus omega_census(const ContourGeometry& geo, std::size_t max_edges, unsigned workers) {
  const auto& g = geo.torus().graph();
  const std::size_t ne = g.edge_count();
  if (ne > max_edges || ne > 40)
    throw BudgetExceeded("omega census over 2^" + std::to_string(ne) + " configurations exceeds budget 2^" +
                         std::to_string(max_edges));
  // Shards by the top bits of the mask; merged in shard order.
  const unsigned shard_bits = std::min<std::size_t>(6, ne);
  const std::uint64_t shards = std::uint64_t{1} << shard_bits;
  const std::uint64_t per_shard = (std::uint64_t{1} << ne) >> shard_bits;
  std::vector<OmegaCensus> partial(shards);
  auto run_shard = [&](std::uint64_t s) {
    auto& out = partial[s];
    for (std::uint64_t mask = s * per_shard; mask < (s + 1) * per_shard; ++mask) {
      auto a = EdgeConfig::from_mask(ne, mask);
      auto dec = classify(geo, a);
      int cls = static_cast<int>(dec.omega);
      int ext = static_cast<int>(vertex_cells_in(geo, dec.ext_gamma));
      ++out.counts[{cls, static_cast<int>(a.count()), static_cast<int>(component_count(g, a)), ext}];
      ++out.class_counts[cls];
      for (const auto& sd : dec.sides) ++out.rule_counts[static_cast<int>(sd.rule)];
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    for (std::uint64_t s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::uint64_t s = w; s < shards; s += workers) run_shard(s);
      });
    for (auto& t : pool) t.join();
  }
  OmegaCensus census;
  census.spec = geo.torus().spec();
  census.edge_count = ne;
  for (const auto& p : partial) {
    for (const auto& [k, v] : p.counts) census.counts[k] += v;
    for (int i = 0; i < 3; ++i) {
      census.class_counts[i] += p.class_counts[i];
      census.rule_counts[i] += p.rule_counts[i];
    }
  }
  return census;
}

double OmegaSums::nu_ord() const { return std::exp(std::log(q) + log_z_ord - log_z); }
double OmegaSums::nu_dis() const { return std::exp(log_z_dis - log_z); }
double OmegaSums::nu_tun() const { return std::exp(log_z_tun - log_z); }

OmegaSums omega_sums(const OmegaCensus& census, const ModelParams& m) {
  LogSumExp by_class[3], all;
  const double lq = std::log(static_cast<double>(m.q));
  const double ne = static_cast<double>(census.edge_count);
  for (const auto& [key, count] : census.counts) {
    auto [cls, k, c, ext] = key;
    (void)ext;
    double lw = k * m.log_p() + (ne - k) * m.log_1mp() + c * lq + std::log(static_cast<double>(count));
    by_class[cls].add(lw);
    all.add(lw);
  }
  OmegaSums s;
  s.q = m.q;
  s.log_z = all.value();
  s.log_z_ord = by_class[static_cast<int>(OmegaClass::Ord)].value() - lq;
  s.log_z_dis = by_class[static_cast<int>(OmegaClass::Dis)].value();
  s.log_z_tun = by_class[static_cast<int>(OmegaClass::Tun)].value();
  return s;
}

std::vector<double> ext_volume_histogram(const OmegaCensus& census, const ModelParams& m, OmegaClass cls) {
  const double lq = std::log(static_cast<double>(m.q));
  const double ne = static_cast<double>(census.edge_count);
  std::vector<LogSumExp> bins(census.spec.volume() + 1);
  LogSumExp all;
  for (const auto& [key, count] : census.counts) {
    auto [c_cls, k, c, ext] = key;
    double lw = k * m.log_p() + (ne - k) * m.log_1mp() + c * lq + std::log(static_cast<double>(count));
    all.add(lw);
    if (c_cls == static_cast<int>(cls)) bins[ext].add(lw);
  }
  std::vector<double> out(bins.size());
  for (std::size_t v = 0; v < bins.size(); ++v) out[v] = std::exp(bins[v].value() - all.value());
  return out;
}

double log_restricted_z(const ModelParams& m, const ContourGeometry& geo, const HalfCellSet& region, Phase label,
                        std::size_t max_edges) {
  const auto& g = geo.torus().graph();
  const int d = geo.dim();
  std::vector<std::uint32_t> local;
  for (std::uint32_t e = 0; e < g.edge_count(); ++e)
    if (region.test(geo.grid().edge_cell(geo.torus(), e))) local.push_back(e);
  if (local.size() > max_edges)
    throw BudgetExceeded("restricted partition function: " + std::to_string(local.size()) +
                         " local edges exceed budget " + std::to_string(max_edges));
  // A facet may belong to a contour in the region only if every cell it
  // touches lies in the region (distance >= 1/2 from the complement).
  std::vector<char> facet_inside(geo.facet_count(), 0);
  for (std::uint32_t f = 0; f < geo.facet_count(); ++f) {
    auto touch = geo.cells_touching_facet(f);
    facet_inside[f] = std::all_of(touch.begin(), touch.end(), [&](auto c) { return region.test(c); });
  }
  const double lq = std::log(static_cast<double>(m.q));
  LogSumExp z;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << local.size()); ++mask) {
    EdgeConfig a = label == Phase::Dis ? EdgeConfig(g.edge_count()) : EdgeConfig::all(g.edge_count());
    for (std::size_t k = 0; k < local.size(); ++k)
      if ((mask >> k) & 1u) a.assign(local[k], label == Phase::Dis);
    auto cells = fatten(geo, a);
    auto pieces = boundary_components(geo, cells);
    bool valid = true;
    std::size_t norm = 0;
    std::vector<char> walls(geo.facet_count(), 0);
    for (const auto& p : pieces) {
      if (!p.is_contour()) valid = false;
      for (auto f : p.facets) {
        if (!facet_inside[f]) valid = false;
        walls[f] = 1;
      }
      norm += p.norm;
    }
    if (!valid) continue;
    auto [comp, count] = cell_components(geo, walls);
    std::vector<char> comp_ordered(count, 0);
    for (std::uint32_t c = 0; c < geo.cell_count(); ++c)
      if (cells.test(c)) comp_ordered[comp[c]] = 1;
    std::size_t ordered_regions = std::count(comp_ordered.begin(), comp_ordered.end(), 1);
    std::size_t n_ord = 0, n_dis = 0;
    for (std::uint32_t c = 0; c < geo.cell_count(); ++c)
      if (region.test(c) && geo.grid().is_vertex_cell(c)) (cells.test(c) ? n_ord : n_dis)++;
    z.add(static_cast<double>(ordered_regions) * lq - m.e_dis(d) * static_cast<double>(n_dis) -
          m.e_ord(d) * static_cast<double>(n_ord) - m.kappa() * static_cast<double>(norm));
  }
  return label == Phase::Ord ? z.value() - lq : z.value();
}

double log_contour_activity(const ModelParams& m, const ContourGeometry& geo, const SurfacePiece& gamma,
                            Phase external_label, std::size_t max_edges) {
  auto sides = interior_exterior(geo, gamma);
  double z_ord = log_restricted_z(m, geo, sides.interior, Phase::Ord, max_edges);
  double z_dis = log_restricted_z(m, geo, sides.interior, Phase::Dis, max_edges);
  double peierls = -m.kappa() * static_cast<double>(gamma.norm);
  if (external_label == Phase::Ord) return peierls + z_dis - z_ord;
  return peierls + std::log(static_cast<double>(m.q)) + z_ord - z_dis;
}

PieceCensus piece_count_census(const ContourGeometry& geo, std::size_t max_edges) {
  const auto& g = geo.torus().graph();
  const std::size_t ne = g.edge_count();
  if (ne > max_edges || ne > 40) throw BudgetExceeded("piece census exceeds budget");
  std::set<std::vector<std::uint32_t>> contours, interfaces, around;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << ne); ++mask) {
    auto dec = classify(geo, EdgeConfig::from_mask(ne, mask));
    for (std::size_t k = 0; k < dec.pieces.size(); ++k) {
      const auto& p = dec.pieces[k];
      std::vector<std::uint32_t> key;
      key.reserve(p.facets.size());
      for (std::size_t j = 0; j < p.facets.size(); ++j) key.push_back(2 * p.facets[j] + (p.low_inside[j] ? 1 : 0));
      if (p.is_contour()) {
        auto pos = std::find(dec.contours.begin(), dec.contours.end(), k) - dec.contours.begin();
        if (dec.sides[pos].interior.test(0)) around.insert(key);
        contours.insert(std::move(key));
      } else {
        interfaces.insert(std::move(key));
      }
    }
  }
  auto norm_of = [&](const std::vector<std::uint32_t>& key) {
    std::size_t n = 0;
    for (auto x : key)
      if (geo.facet_crosses_edge(x / 2)) ++n;
    return n;
  };
  PieceCensus pc;
  for (const auto& k : contours) ++pc.contours_by_norm[norm_of(k)];
  for (const auto& k : interfaces) ++pc.interfaces_by_norm[norm_of(k)];
  for (const auto& k : around) ++pc.contours_around_origin_by_norm[norm_of(k)];
  pc.min_contour_norm = pc.contours_by_norm.empty() ? 0 : pc.contours_by_norm.begin()->first;
  pc.min_interface_norm = pc.interfaces_by_norm.empty() ? 0 : pc.interfaces_by_norm.begin()->first;
  return pc;
}

std::string decomposition_json(const ContourGeometry& geo, const ContourDecomposition& dec) {
  using nlohmann::json;
  json j;
  j["torus"] = {{"L", dec.spec.side}, {"d", dec.spec.dim}};
  j["class"] = omega_class_name(dec.omega);
  auto cells = ordered_cells(geo, dec);
  json ordered = json::array();
  for (std::uint32_t c = 0; c < geo.cell_count(); ++c)
    if (cells.test(c)) ordered.push_back(geo.grid().decode(c));
  j["ordered_cells"] = ordered;
  json pieces = json::array();
  for (std::size_t k = 0; k < dec.pieces.size(); ++k) {
    const auto& p = dec.pieces[k];
    json jp;
    jp["kind"] = p.is_contour() ? "contour" : "interface";
    jp["norm"] = p.norm;
    jp["winding"] = p.winding;
    json facets = json::array();
    for (std::size_t f = 0; f < p.facets.size(); ++f)
      facets.push_back({{"cell", geo.grid().decode(geo.facet_low(p.facets[f]))},
                        {"dir", geo.facet_dir(p.facets[f])},
                        {"low_inside", static_cast<bool>(p.low_inside[f])}});
    jp["facets"] = facets;
    auto pos = std::find(dec.contours.begin(), dec.contours.end(), k);
    if (pos != dec.contours.end()) {
      const auto& sd = dec.sides[pos - dec.contours.begin()];
      jp["interior_vertices"] = vertex_cells_in(geo, sd.interior);
      jp["exterior_vertices"] = vertex_cells_in(geo, sd.exterior);
      jp["ext_rule"] = ext_rule_name(sd.rule);
      jp["diameter"] = diameter(geo, p).diam;
      // External label: the side of the contour facing its exterior.
      bool ext_low = sd.exterior.test(geo.facet_low(p.facets[0]));
      bool ext_ordered = ext_low == static_cast<bool>(p.low_inside[0]);
      jp["external_label"] = ext_ordered ? "ord" : "dis";
    }
    pieces.push_back(jp);
  }
  j["pieces"] = pieces;
  j["ext_gamma_vertices"] = vertex_cells_in(geo, dec.ext_gamma);
  return j.dump(2);
}

}  // namespace pottsmix
