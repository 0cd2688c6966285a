#include "molmap/hybridize.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace molmap {

namespace {

struct LiveSegment {
  std::vector<int> pixels;
  bool alive{true};
};

struct LiveBox {
  Box box;
  double score{0.0};
  bool alive{true};
};

std::vector<int> box_pixels(const Box& b, int n) {
  std::vector<int> px;
  px.reserve(b.area());
  for (int y = b.y; y < b.y + b.h; ++y)
    for (int x = b.x; x < b.x + b.w; ++x) px.push_back(y * n + x);
  return px;
}

}  // namespace

RoiSet hybridize(const BoxSet& boxes, const Segmentation& seg) {
  int n = seg.n;
  RoiSet out;
  out.n = n;
  if (boxes.boxes.empty()) return out;

  std::vector<LiveSegment> segs;
  for (const auto& px : seg.segment_pixels) segs.push_back(LiveSegment{px, true});
  std::vector<LiveBox> lb;
  for (const auto& sb : boxes.boxes) lb.push_back(LiveBox{sb.box, sb.score, true});

  // seg_of[p]: index of the live segment owning pixel p, -1 otherwise.
  std::vector<int> seg_of(static_cast<std::size_t>(n) * n, -1);
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (int p : segs[i].pixels) seg_of[p] = static_cast<int>(i);

  auto touched_segments = [&](const Box& b) {
    std::set<int> t;
    for (int y = b.y; y < b.y + b.h; ++y)
      for (int x = b.x; x < b.x + b.w; ++x) {
        int s = seg_of[static_cast<std::size_t>(y) * n + x];
        if (s >= 0 && segs[s].alive) t.insert(s);
      }
    return t;
  };
  auto box_inside_segment = [&](const Box& b, int si) {
    for (int y = b.y; y < b.y + b.h; ++y)
      for (int x = b.x; x < b.x + b.w; ++x)
        if (seg_of[static_cast<std::size_t>(y) * n + x] != si) return false;
    return true;
  };

  auto finalize = [&](std::vector<int> region_pixels, double score) {
    std::sort(region_pixels.begin(), region_pixels.end());
    region_pixels.erase(std::unique(region_pixels.begin(), region_pixels.end()),
                        region_pixels.end());
    // Absorbed pixels leave any other segment's territory.
    for (int p : region_pixels) {
      int s = seg_of[p];
      if (s >= 0) {
        auto& sp = segs[s].pixels;
        sp.erase(std::remove(sp.begin(), sp.end(), p), sp.end());
        if (sp.empty()) segs[s].alive = false;
        seg_of[p] = -1;
      }
    }
    Roi roi;
    roi.id = static_cast<int>(out.rois.size()) + 1;
    roi.pixels = std::move(region_pixels);
    roi.score = score;
    // Boxes intersecting the finalized region are spent.
    auto in_region = [&](const Box& b) {
      for (int y = b.y; y < b.y + b.h; ++y)
        for (int x = b.x; x < b.x + b.w; ++x)
          if (std::binary_search(roi.pixels.begin(), roi.pixels.end(), y * n + x)) return true;
      return false;
    };
    for (auto& b : lb) {
      if (!b.alive) continue;
      bool contained = true;
      for (int p : box_pixels(b.box, n))
        if (!std::binary_search(roi.pixels.begin(), roi.pixels.end(), p)) {
          contained = false;
          break;
        }
      if (contained) {
        roi.validating_boxes.push_back(b.box);
        b.alive = false;
      } else if (in_region(b.box)) {
        b.alive = false;
      }
    }
    out.rois.push_back(std::move(roi));
  };

  for (;;) {
    // Validation sets per live segment.
    std::vector<std::vector<int>> cand(segs.size());  // box indices intersecting each segment
    for (std::size_t bi = 0; bi < lb.size(); ++bi) {
      if (!lb[bi].alive) continue;
      for (int s : touched_segments(lb[bi].box)) cand[s].push_back(static_cast<int>(bi));
    }

    // Drop segments no box intersects.
    bool any_alive = false;
    for (std::size_t si = 0; si < segs.size(); ++si) {
      if (!segs[si].alive) continue;
      if (cand[si].empty()) {
        segs[si].alive = false;
        for (int p : segs[si].pixels) seg_of[p] = -1;
        segs[si].pixels.clear();
      } else {
        any_alive = true;
      }
    }
    if (!any_alive) break;

    // Strongest evidence first.
    int best_seg = -1;
    double best_priority = -std::numeric_limits<double>::infinity();
    for (std::size_t si = 0; si < segs.size(); ++si) {
      if (!segs[si].alive || cand[si].empty()) continue;
      double pr = -std::numeric_limits<double>::infinity();
      for (int bi : cand[si]) pr = std::max(pr, lb[bi].score);
      if (pr > best_priority) {
        best_priority = pr;
        best_seg = static_cast<int>(si);
      }
    }
    int si = best_seg;

    // Already valid: some box lies fully inside the segment.
    bool valid = false;
    for (int bi : cand[si])
      if (box_inside_segment(lb[bi].box, si)) {
        valid = true;
        break;
      }
    if (valid) {
      finalize(segs[si].pixels, best_priority);
      segs[si].alive = false;
      segs[si].pixels.clear();
      continue;
    }

    // Exclusive candidates: boxes touching no other live segment.
    long best_area = std::numeric_limits<long>::max();
    int best_box = -1;
    std::pair<int, int> best_tie{0, 0};
    for (int bi : cand[si]) {
      auto touched = touched_segments(lb[bi].box);
      if (touched.size() != 1) continue;
      long extra = 0;
      for (int p : box_pixels(lb[bi].box, n))
        if (seg_of[p] != si) ++extra;
      long area = static_cast<long>(segs[si].pixels.size()) + extra;
      std::pair<int, int> tie{lb[bi].box.y, lb[bi].box.x};
      if (area < best_area || (area == best_area && tie < best_tie)) {
        best_area = area;
        best_box = bi;
        best_tie = tie;
      }
    }
    if (best_box >= 0) {
      auto region = segs[si].pixels;
      auto bp = box_pixels(lb[best_box].box, n);
      region.insert(region.end(), bp.begin(), bp.end());
      segs[si].alive = false;
      segs[si].pixels.clear();
      finalize(std::move(region), best_priority);
      continue;
    }

    // Only shared boxes remain: merge with a neighboring segment through the
    // box that gives the smallest resulting region.
    best_area = std::numeric_limits<long>::max();
    best_box = -1;
    int best_other = -1;
    for (int bi : cand[si]) {
      auto touched = touched_segments(lb[bi].box);
      for (int other : touched) {
        if (other == si) continue;
        std::set<int> region(segs[si].pixels.begin(), segs[si].pixels.end());
        region.insert(segs[other].pixels.begin(), segs[other].pixels.end());
        for (int p : box_pixels(lb[bi].box, n)) region.insert(p);
        long area = static_cast<long>(region.size());
        std::pair<int, int> tie{lb[bi].box.y, lb[bi].box.x};
        if (area < best_area || (area == best_area && tie < best_tie)) {
          best_area = area;
          best_box = bi;
          best_other = other;
          best_tie = tie;
        }
      }
    }
    if (best_box >= 0) {
      auto region = segs[si].pixels;
      region.insert(region.end(), segs[best_other].pixels.begin(), segs[best_other].pixels.end());
      auto bp = box_pixels(lb[best_box].box, n);
      region.insert(region.end(), bp.begin(), bp.end());
      segs[si].alive = false;
      segs[si].pixels.clear();
      segs[best_other].alive = false;
      segs[best_other].pixels.clear();
      finalize(std::move(region), best_priority);
      continue;
    }

    // No exclusive candidate and no reachable partner (box pixels all outside
    // live segments): absorb the strongest intersecting box directly.
    int bi = cand[si][0];
    for (int b : cand[si])
      if (lb[b].score > lb[bi].score) bi = b;
    auto region = segs[si].pixels;
    auto bp = box_pixels(lb[bi].box, n);
    region.insert(region.end(), bp.begin(), bp.end());
    segs[si].alive = false;
    segs[si].pixels.clear();
    finalize(std::move(region), best_priority);
  }

  return out;
}

}  // namespace molmap
