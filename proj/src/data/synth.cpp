#include <algorithm>
#include <cstdio>

#include "getnext/core/error.hpp"
#include "getnext/core/rng.hpp"
#include "getnext/data/dataset.hpp"

namespace getnext::data {

namespace {

// 2012-04-01T00:00:00Z
constexpr std::int64_t kEpochStart = 1333238400;
constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kDay = 86400;

std::string padded(char prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*zu", prefix, width, i);
  return buf;
}

struct Venue {
  std::string id;
  std::string category;
  double lat;
  double lon;
};

std::vector<Venue> make_venues(const SynthOptions& o, core::Rng& rng) {
  std::vector<Venue> v;
  for (std::size_t p = 0; p < o.n_pois; ++p) {
    v.push_back({padded('p', p, 5), padded('c', p % o.n_categories, 3),
                 40.55 + rng.uniform(0.0, 0.35), -74.05 + rng.uniform(0.0, 0.3)});
  }
  return v;
}

CheckIn visit(const std::string& user, const Venue& venue, std::int64_t t) {
  return CheckIn{user, venue.id, venue.category, venue.lat, venue.lon, t, 0};
}

// Walks every other day; a 26 h+ gap separates consecutive walks.
std::int64_t walk_day_start(std::size_t walk) {
  return kEpochStart + static_cast<std::int64_t>(2 * walk) * kDay;
}

void cycle_user(const SynthOptions& o, std::size_t u, const std::vector<Venue>& venues,
                std::vector<CheckIn>& out) {
  const std::string user = padded('u', u, 4);
  std::size_t position = u % o.n_pois;
  for (std::size_t n = 0; n < o.checkins_per_user; ++n) {
    const std::size_t walk = n / 12;
    const std::int64_t t = walk_day_start(walk) + static_cast<std::int64_t>(n % 12) * 2 * kHour;
    out.push_back(visit(user, venues[position], t));
    position = (position + 1) % o.n_pois;
  }
}

void uniform_user(const SynthOptions& o, std::size_t u, const std::vector<Venue>& venues,
                  core::Rng& rng, std::vector<CheckIn>& out) {
  const std::string user = padded('u', u, 4);
  std::size_t n = 0;
  for (std::size_t walk = 0; n < o.checkins_per_user; ++walk) {
    const std::size_t len = std::min<std::size_t>(3 + rng.below(6), o.checkins_per_user - n);
    std::int64_t t = walk_day_start(walk) + static_cast<std::int64_t>(6 + rng.below(5)) * kHour;
    for (std::size_t s = 0; s < len; ++s, ++n) {
      out.push_back(visit(user, venues[rng.below(o.n_pois)], t));
      t += static_cast<std::int64_t>(1 + rng.below(2)) * kHour +
           static_cast<std::int64_t>(rng.below(60)) * 60;
    }
  }
}

// A fixed set of short POI paths. Long-history users walk them end to end;
// short-history users take brief pieces of the same paths, so most of what a
// short-history user does next is only visible in other users' data.
struct Fragments {
  std::vector<std::vector<std::size_t>> paths;
};

Fragments make_fragments(const SynthOptions& o, core::Rng& rng) {
  std::vector<std::size_t> perm(o.n_pois);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(std::span<std::size_t>(perm));
  Fragments f;
  const std::size_t len = std::min<std::size_t>(6, o.n_pois);
  for (std::size_t start = 0; start + 1 < perm.size(); start += len) {
    std::vector<std::size_t> path;
    for (std::size_t i = start; i < std::min(start + len, perm.size()); ++i) path.push_back(perm[i]);
    if (path.size() >= 2) f.paths.push_back(std::move(path));
  }
  return f;
}

void planted_user(const SynthOptions& o, std::size_t u, bool long_history,
                  const std::vector<Venue>& venues, const Fragments& frags, core::Rng& rng,
                  std::vector<CheckIn>& out) {
  const std::string user = padded('u', u, 4);
  const std::size_t budget =
      long_history ? o.checkins_per_user : std::max<std::size_t>(10, o.checkins_per_user / 8);
  // Each user favours a couple of fragments.
  const std::size_t fav_a = rng.below(frags.paths.size());
  const std::size_t fav_b = rng.below(frags.paths.size());
  // Short-history users spread their few walks over the span long-history
  // users cover, so the chronological split sees everyone in every period.
  const std::size_t long_span = std::max<std::size_t>(2, o.checkins_per_user / 6);
  const std::size_t short_walks = std::max<std::size_t>(1, budget / 3);
  const std::size_t max_gap = std::max<std::size_t>(1, 2 * long_span / short_walks);
  std::size_t n = 0;
  std::size_t walk = 0;
  while (n < budget) {
    const std::size_t len = long_history ? 4 + rng.below(5) : 2 + rng.below(3);
    const std::size_t take = std::min(len, budget - n);
    const double roll = rng.uniform();
    std::size_t frag = roll < 0.4 ? fav_a : (roll < 0.7 ? fav_b : rng.below(frags.paths.size()));
    std::size_t pos = rng.below(frags.paths[frag].size());
    std::int64_t t = walk_day_start(walk) + static_cast<std::int64_t>(7 + rng.below(6)) * kHour;
    for (std::size_t s = 0; s < take; ++s, ++n) {
      std::size_t poi = frags.paths[frag][pos];
      if (rng.bernoulli(0.1)) poi = rng.below(o.n_pois);
      out.push_back(visit(user, venues[poi], t));
      t += kHour + static_cast<std::int64_t>(rng.below(90)) * 60;
      if (++pos == frags.paths[frag].size()) {
        // Fragments chain into the next one deterministically.
        frag = (frag + 1) % frags.paths.size();
        pos = 0;
      }
    }
    walk += long_history ? 1 : 1 + rng.below(max_gap);
  }
}

}  // namespace

SynthPattern parse_pattern(const std::string& name) {
  if (name == "cycle") return SynthPattern::cycle;
  if (name == "planted_shared_paths") return SynthPattern::planted_shared_paths;
  if (name == "uniform") return SynthPattern::uniform;
  throw InputError("unknown synthetic pattern '" + name + "'");
}

const char* to_string(SynthPattern p) {
  switch (p) {
    case SynthPattern::cycle: return "cycle";
    case SynthPattern::planted_shared_paths: return "planted_shared_paths";
    case SynthPattern::uniform: return "uniform";
  }
  return "?";
}

std::vector<CheckIn> synthesize(const SynthOptions& o) {
  if (o.n_pois < 4) throw InputError("synthesize: n_pois must be at least 4");
  if (o.n_users < 1) throw InputError("synthesize: n_users must be at least 1");
  if (o.n_categories < 1 || o.n_categories > o.n_pois) {
    throw InputError("synthesize: n_categories must be in [1, n_pois]");
  }
  if (o.checkins_per_user < 2) throw InputError("synthesize: checkins_per_user must be >= 2");

  core::Rng rng(o.seed);
  const auto venues = make_venues(o, rng);
  std::vector<CheckIn> out;
  switch (o.pattern) {
    case SynthPattern::cycle:
      for (std::size_t u = 0; u < o.n_users; ++u) cycle_user(o, u, venues, out);
      break;
    case SynthPattern::uniform:
      for (std::size_t u = 0; u < o.n_users; ++u) {
        core::Rng user_rng = rng.fork(u);
        uniform_user(o, u, venues, user_rng, out);
      }
      break;
    case SynthPattern::planted_shared_paths: {
      const Fragments frags = make_fragments(o, rng);
      const std::size_t n_long = std::max<std::size_t>(1, (o.n_users + 4) / 5);
      for (std::size_t u = 0; u < o.n_users; ++u) {
        core::Rng user_rng = rng.fork(u);
        planted_user(o, u, u < n_long, venues, frags, user_rng, out);
      }
      break;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const CheckIn& a, const CheckIn& b) {
    return std::tie(a.user_id, a.timestamp) < std::tie(b.user_id, b.timestamp);
  });
  return out;
}

}  // namespace getnext::data
