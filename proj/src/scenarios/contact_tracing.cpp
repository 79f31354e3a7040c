// Copyright 2026 The pbd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "pbd/scenarios/contact_tracing.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "pbd/common/error.hpp"
#include "pbd/crypto/box.hpp"
#include "pbd/crypto/hash.hpp"

namespace pbd::scenarios {
namespace {

using te::Record;
using te::TypedValue;

constexpr std::string_view kApp = "CT-App";
constexpr std::string_view kHealthAuthority = "HealthAuthority";
constexpr Timestamp kCampaign = 30 * 86400;

const crypto::TypeId kUploadType("CT/Upload");
const crypto::TypeId kReportType("CT/InfectionReport");
const crypto::TypeId kTokenKeyType("CT/TokenKey");
const crypto::TypeId kDirectoryType("CT/PhoneDirectory");
const crypto::TypeId kNotificationType("CT/Notification");

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }
double from_bits(std::uint64_t v) { return std::bit_cast<double>(v); }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text, const std::string& where) {
  double v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() ||
      !std::isfinite(v)) {
    throw Error(ErrorCode::kConfig, where + ": not a number: " + std::string(text));
  }
  return v;
}

bool certificate_valid(const identity::VidKeyCertificate& cert,
                       ByteView authority_public_key) {
  return crypto::verify(authority_public_key, cert.signed_portion(),
                        cert.signature);
}

bool within(const ContactRecord& a, const ContactRecord& b,
            const TraceQueryParams& p) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const Timestamp dt = a.time > b.time ? a.time - b.time : b.time - a.time;
  return dx * dx + dy * dy <= p.epsilon * p.epsilon && dt <= p.delta;
}

void verify_report(const InfectionReport& report, ByteView doctor_public_key) {
  if (!crypto::verify(doctor_public_key, report.signed_portion(),
                      report.doctor_signature)) {
    throw Error(ErrorCode::kBadDoctorSignature,
                "infection report is not signed by a registered doctor");
  }
}

}  // namespace

std::string_view to_string(ContactOrigin origin) {
  return origin == ContactOrigin::kGps ? "GPS" : "BLE";
}

Bytes ContactRecord::signed_portion() const {
  FrameWriter w("CTR0");
  w.field(vid).field_u64(bits(x)).field_u64(bits(y)).field_i64(time);
  w.field_u64(static_cast<std::uint64_t>(origin));
  return w.finish();
}

Bytes ContactRecord::serialize() const {
  FrameWriter w("CTR1");
  w.field(signed_portion()).field(signature);
  return w.finish();
}

ContactRecord ContactRecord::parse(ByteView data) {
  FrameReader outer(data, "CTR1");
  const Bytes body = outer.field_bytes();
  ContactRecord r;
  r.signature = outer.field_bytes();
  outer.expect_end();
  FrameReader in(body, "CTR0");
  r.vid = in.field_digest();
  r.x = from_bits(in.field_u64());
  r.y = from_bits(in.field_u64());
  r.time = in.field_i64();
  const std::uint64_t origin = in.field_u64();
  if (origin != 1 && origin != 2) throw Error(ErrorCode::kMalformed, "origin");
  r.origin = static_cast<ContactOrigin>(origin);
  in.expect_end();
  return r;
}

ContactRecord sign_gps_record(const Digest& vid, double x, double y,
                              Timestamp time, const crypto::KeyPair& device) {
  ContactRecord r{vid, x, y, time, ContactOrigin::kGps, {}};
  r.signature = crypto::sign(device.private_key, r.signed_portion());
  return r;
}

Bytes make_token(const identity::VidKeyCertificate& sender,
                 const ContactRecord& gps, ByteView token_public_key, Rng& rng) {
  FrameWriter w("TOK1");
  w.field(sender.serialize()).field(gps.serialize());
  return crypto::box_seal(token_public_key, w.finish(), as_bytes("CT token"), rng);
}

Bytes Receipt::signed_portion() const {
  FrameWriter w("RCP0");
  w.field(receiver).field(token);
  return w.finish();
}

Bytes Receipt::serialize() const {
  FrameWriter w("RCP1");
  w.field(receiver).field(token).field(signature);
  return w.finish();
}

Receipt Receipt::parse(ByteView data) {
  FrameReader in(data, "RCP1");
  Receipt r;
  r.receiver = in.field_digest();
  r.token = in.field_bytes();
  r.signature = in.field_bytes();
  in.expect_end();
  return r;
}

Receipt make_receipt(const Digest& receiver, Bytes token,
                     const crypto::KeyPair& device) {
  Receipt r{receiver, std::move(token), {}};
  r.signature = crypto::sign(device.private_key, r.signed_portion());
  return r;
}

Bytes CtUpload::serialize() const {
  FrameWriter w("UPL1");
  w.field(certificate.serialize()).field_i64(uploaded_at);
  w.field_u64(gps.size());
  for (const auto& r : gps) w.field(r.serialize());
  w.field_u64(receipts.size());
  for (const auto& r : receipts) w.field(r.serialize());
  return w.finish();
}

CtUpload CtUpload::parse(ByteView data) {
  FrameReader in(data, "UPL1");
  CtUpload u;
  u.certificate = identity::VidKeyCertificate::parse(in.field());
  u.uploaded_at = in.field_i64();
  const std::uint64_t n_gps = in.field_u64();
  if (n_gps > data.size()) throw Error(ErrorCode::kMalformed, "gps count");
  for (std::uint64_t i = 0; i < n_gps; ++i) {
    u.gps.push_back(ContactRecord::parse(in.field()));
  }
  const std::uint64_t n_rcp = in.field_u64();
  if (n_rcp > data.size()) throw Error(ErrorCode::kMalformed, "receipt count");
  for (std::uint64_t i = 0; i < n_rcp; ++i) {
    u.receipts.push_back(Receipt::parse(in.field()));
  }
  in.expect_end();
  return u;
}

std::vector<TrajectoryPoint> parse_trajectories(std::string_view text) {
  std::vector<TrajectoryPoint> out;
  std::size_t line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string line(trim(raw));
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line = std::string(trim(line.substr(0, hash)));
    }
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    std::vector<std::string> f;
    for (const auto& part : split(line, ' ')) {
      if (!trim(part).empty()) f.emplace_back(trim(part));
    }
    if (f.size() != 4) {
      throw Error(ErrorCode::kConfig, where + ": expected `agent t x y`");
    }
    std::int64_t agent = 0, t = 0;
    try {
      agent = parse_int(f[0]);
      t = parse_int(f[1]);
    } catch (const Error&) {
      throw Error(ErrorCode::kConfig, where + ": bad integer");
    }
    if (agent < 0) throw Error(ErrorCode::kConfig, where + ": negative agent");
    out.push_back({static_cast<std::size_t>(agent), t, parse_double(f[2], where),
                   parse_double(f[3], where)});
  }
  return out;
}

std::string format_trajectories(const std::vector<TrajectoryPoint>& points) {
  std::string out = "# agent t x y\n";
  for (const auto& p : points) {
    out += std::to_string(p.agent) + " " + std::to_string(p.time) + " " +
           format_double(p.x) + " " + format_double(p.y) + "\n";
  }
  return out;
}

std::vector<TrajectoryPoint> random_walk(std::size_t agents, std::size_t periods,
                                         Timestamp start, Timestamp period,
                                         double area_m, double step_m, Rng& rng) {
  // Uniform in [0, 1) from the top 53 bits; portable across standard
  // libraries, unlike the std distributions.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto reflect = [area_m](double v) {
    while (v < 0 || v > area_m) v = v < 0 ? -v : 2 * area_m - v;
    return v;
  };
  std::vector<double> xs(agents), ys(agents);
  for (std::size_t a = 0; a < agents; ++a) {
    xs[a] = unit() * area_m;
    ys[a] = unit() * area_m;
  }
  std::vector<TrajectoryPoint> out;
  out.reserve(agents * periods);
  for (std::size_t k = 0; k < periods; ++k) {
    const Timestamp t = start + static_cast<Timestamp>(k) * period;
    for (std::size_t a = 0; a < agents; ++a) {
      if (k > 0) {
        xs[a] = reflect(xs[a] + (2 * unit() - 1) * step_m);
        ys[a] = reflect(ys[a] + (2 * unit() - 1) * step_m);
      }
      out.push_back({a, t, xs[a], ys[a]});
    }
  }
  return out;
}

CtCollection ct_collect(const std::vector<CtAgent>& agents,
                        const std::vector<TrajectoryPoint>& trajectories,
                        double ble_range_m, Timestamp sample_period_s,
                        Timestamp upload_period_s, ByteView token_public_key,
                        Rng& rng) {
  if (!(ble_range_m >= 0) || sample_period_s <= 0 || upload_period_s <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "collection periods and range");
  }
  CtCollection out;
  if (trajectories.empty()) return out;
  Timestamp t0 = trajectories.front().time;
  for (const auto& p : trajectories) {
    if (p.agent >= agents.size()) {
      throw Error(ErrorCode::kConfig, "trajectory names unknown agent " +
                                          std::to_string(p.agent));
    }
    t0 = std::min(t0, p.time);
  }
  // time -> agent -> (x, y); one sample per agent per time.
  std::map<Timestamp, std::map<std::size_t, std::pair<double, double>>> samples;
  for (const auto& p : trajectories) {
    if ((p.time - t0) % sample_period_s != 0) continue;
    if (!samples[p.time].emplace(p.agent, std::make_pair(p.x, p.y)).second) {
      throw Error(ErrorCode::kConfig, "two samples for agent " +
                                          std::to_string(p.agent) + " at " +
                                          std::to_string(p.time));
    }
  }

  std::vector<CtUpload> pending(agents.size());
  std::vector<Timestamp> last_upload(agents.size(), t0);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    pending[i].certificate = agents[i].party.cert;
  }
  auto flush = [&](std::size_t i, Timestamp t) {
    last_upload[i] = t;
    if (!agents[i].uploads) {
      pending[i].gps.clear();
      pending[i].receipts.clear();
      return;
    }
    pending[i].uploaded_at = t;
    out.uploads.push_back(std::move(pending[i]));
    pending[i] = CtUpload{};
    pending[i].certificate = agents[i].party.cert;
  };

  const double range2 = ble_range_m * ble_range_m;
  for (const auto& [t, at] : samples) {
    std::vector<std::size_t> present;
    std::map<std::size_t, Bytes> tokens;
    for (const auto& [i, xy] : at) {
      const Party& p = agents[i].party;
      ContactRecord gps = sign_gps_record(p.vid.value, xy.first, xy.second, t, p.key);
      tokens[i] = make_token(p.cert, gps, token_public_key, rng);
      out.broadcast.push_back({i, t, tokens[i]});
      pending[i].gps.push_back(std::move(gps));
      present.push_back(i);
      ++out.gps_records;
    }
    for (std::size_t a = 0; a < present.size(); ++a) {
      for (std::size_t b = a + 1; b < present.size(); ++b) {
        const std::size_t i = present[a], j = present[b];
        const double dx = at.at(i).first - at.at(j).first;
        const double dy = at.at(i).second - at.at(j).second;
        if (dx * dx + dy * dy > range2) continue;
        pending[j].receipts.push_back(
            make_receipt(agents[j].party.vid.value, tokens[i], agents[j].party.key));
        pending[i].receipts.push_back(
            make_receipt(agents[i].party.vid.value, tokens[j], agents[i].party.key));
        out.exchanges.push_back({i, j, t});
        out.exchanges.push_back({j, i, t});
      }
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (t - last_upload[i] >= upload_period_s) flush(i, t);
    }
  }
  const Timestamp last = samples.rbegin()->first;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!pending[i].gps.empty() || !pending[i].receipts.empty()) flush(i, last);
  }
  return out;
}

ServerRecords server_records(const std::vector<CtUpload>& uploads,
                             ByteView authority_public_key,
                             ByteView token_private_key) {
  ServerRecords out;
  for (const CtUpload& u : uploads) {
    const auto& cert = u.certificate;
    if (!certificate_valid(cert, authority_public_key)) {
      out.dropped += u.gps.size() + u.receipts.size();
      continue;
    }
    for (const ContactRecord& r : u.gps) {
      const bool ok = r.vid == cert.vid && r.origin == ContactOrigin::kGps &&
                      crypto::verify(cert.public_key, r.signed_portion(),
                                     r.signature);
      if (ok) {
        out.records.push_back(r);
      } else {
        ++out.dropped;
      }
    }
    for (const Receipt& rc : u.receipts) {
      std::optional<ContactRecord> ble;
      if (rc.receiver == cert.vid &&
          crypto::verify(cert.public_key, rc.signed_portion(), rc.signature)) {
        const auto plain =
            crypto::box_open(token_private_key, rc.token, as_bytes("CT token"));
        if (plain) {
          try {
            FrameReader in(*plain, "TOK1");
            const auto sender = identity::VidKeyCertificate::parse(in.field());
            const ContactRecord gps = ContactRecord::parse(in.field());
            in.expect_end();
            if (certificate_valid(sender, authority_public_key) &&
                gps.vid == sender.vid && sender.vid != cert.vid &&
                gps.origin == ContactOrigin::kGps &&
                crypto::verify(sender.public_key, gps.signed_portion(),
                               gps.signature)) {
              ble = ContactRecord{cert.vid, gps.x, gps.y, gps.time,
                                  ContactOrigin::kBle, rc.signature};
            }
          } catch (const Error&) {
            // Junk token; dropped below.
          }
        }
      }
      if (ble) {
        out.records.push_back(std::move(*ble));
      } else {
        ++out.dropped;
      }
    }
  }
  return out;
}

std::set<Digest> flag_silent_devices(const std::vector<Digest>& registered,
                                     const std::vector<CtUpload>& uploads,
                                     Timestamp now, Timestamp upload_period_s) {
  std::map<Digest, Timestamp> latest;
  for (const CtUpload& u : uploads) {
    auto [it, fresh] = latest.emplace(u.certificate.vid, u.uploaded_at);
    if (!fresh) it->second = std::max(it->second, u.uploaded_at);
  }
  std::set<Digest> flagged;
  for (const Digest& vid : registered) {
    auto it = latest.find(vid);
    if (it == latest.end() || it->second <= now - upload_period_s) {
      flagged.insert(vid);
    }
  }
  return flagged;
}

void TraceQueryParams::validate() const {
  if (!std::isfinite(epsilon) || epsilon < 0) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be a finite value >= 0");
  }
  if (delta < 0) throw Error(ErrorCode::kInvalidArgument, "delta must be >= 0");
  if (window <= 0) throw Error(ErrorCode::kInvalidArgument, "window must be > 0");
}

Bytes InfectionReport::signed_portion() const {
  FrameWriter w("IRP0");
  w.field(vid).field(report);
  return w.finish();
}

Bytes InfectionReport::serialize() const {
  FrameWriter w("IRP1");
  w.field(vid).field(report).field(doctor_signature);
  return w.finish();
}

InfectionReport InfectionReport::parse(ByteView data) {
  FrameReader in(data, "IRP1");
  InfectionReport r;
  r.vid = in.field_digest();
  r.report = in.field_string();
  r.doctor_signature = in.field_bytes();
  in.expect_end();
  return r;
}

InfectionReport sign_infection_report(const Digest& vid, std::string report,
                                      const crypto::KeyPair& doctor) {
  InfectionReport r{vid, std::move(report), {}};
  r.doctor_signature = crypto::sign(doctor.private_key, r.signed_portion());
  return r;
}

std::size_t GridIndex::CellHash::operator()(const Cell& c) const {
  std::uint64_t h = static_cast<std::uint64_t>(c.x) * 0x9E3779B97F4A7C15ull;
  h ^= static_cast<std::uint64_t>(c.y) + 0xBF58476D1CE4E5B9ull + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(c.t) + 0x94D049BB133111EBull + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

GridIndex::Cell GridIndex::cell_of(double x, double y, Timestamp t) const {
  return {static_cast<std::int64_t>(std::floor(x / cell_)),
          static_cast<std::int64_t>(std::floor(y / cell_)), floor_div(t, bucket_)};
}

GridIndex::GridIndex(std::vector<ContactRecord> records, double cell_m,
                     Timestamp bucket_s)
    : records_(std::move(records)), cell_(cell_m), bucket_(bucket_s) {
  if (!(cell_ > 0) || !std::isfinite(cell_) || bucket_ <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "grid cell and bucket must be > 0");
  }
  if (records_.size() > UINT32_MAX) {
    throw Error(ErrorCode::kInvalidArgument, "too many records");
  }
  cells_.reserve(records_.size());
  for (std::uint32_t i = 0; i < records_.size(); ++i) {
    const ContactRecord& r = records_[i];
    cells_[cell_of(r.x, r.y, r.time)].push_back(i);
    by_vid_[r.vid].push_back(i);
  }
}

std::set<Digest> GridIndex::contacts(const Digest& infected,
                                     const TraceQueryParams& params) const {
  params.validate();
  std::set<Digest> out;
  const auto mine = by_vid_.find(infected);
  if (mine == by_vid_.end()) return out;
  auto consider = [&](const ContactRecord& a, std::uint32_t j) {
    const ContactRecord& c = records_[j];
    if (c.vid != infected && within(a, c, params)) out.insert(c.vid);
  };
  for (const std::uint32_t i : mine->second) {
    const ContactRecord& a = records_[i];
    if (a.time < params.now - params.window || a.time > params.now) continue;
    // The margin keeps points whose rounded distance is within epsilon.
    const double m = params.epsilon + 1e-9 * (std::fabs(a.x) + std::fabs(a.y) +
                                              params.epsilon + 1);
    const Cell lo = cell_of(a.x - m, a.y - m, a.time - params.delta);
    const Cell hi = cell_of(a.x + m, a.y + m, a.time + params.delta);
    const double span = static_cast<double>(hi.x - lo.x + 1) *
                        static_cast<double>(hi.y - lo.y + 1) *
                        static_cast<double>(hi.t - lo.t + 1);
    if (span > static_cast<double>(cells_.size())) {
      // Wider than the grid itself: walk the occupied cells instead.
      for (const auto& [c, members] : cells_) {
        if (c.x < lo.x || c.x > hi.x || c.y < lo.y || c.y > hi.y ||
            c.t < lo.t || c.t > hi.t) {
          continue;
        }
        for (const std::uint32_t j : members) consider(a, j);
      }
      continue;
    }
    for (std::int64_t cx = lo.x; cx <= hi.x; ++cx) {
      for (std::int64_t cy = lo.y; cy <= hi.y; ++cy) {
        for (std::int64_t ct = lo.t; ct <= hi.t; ++ct) {
          const auto it = cells_.find({cx, cy, ct});
          if (it == cells_.end()) continue;
          for (const std::uint32_t j : it->second) consider(a, j);
        }
      }
    }
  }
  return out;
}

std::set<Digest> ct_trace(const InfectionReport& report,
                          ByteView doctor_public_key,
                          const TraceQueryParams& params,
                          const std::vector<ContactRecord>& records) {
  verify_report(report, doctor_public_key);
  params.validate();
  const GridIndex index(records, params.epsilon > 0 ? params.epsilon : 1,
                        params.delta > 0 ? params.delta : 1);
  return index.contacts(report.vid, params);
}

std::set<Digest> ct_trace(const InfectionReport& report,
                          ByteView doctor_public_key,
                          const TraceQueryParams& params, const GridIndex& index) {
  verify_report(report, doctor_public_key);
  return index.contacts(report.vid, params);
}

std::vector<Notification> ct_notify(const std::set<Digest>& contacts,
                                    const std::map<Digest, std::string>& phones,
                                    const std::string& template_text) {
  std::vector<Notification> out;
  for (const Digest& vid : contacts) {
    const auto it = phones.find(vid);
    if (it != phones.end()) out.push_back({it->second, template_text});
  }
  return out;
}

std::string ct_default_rules() {
  const Timestamp start = ManualClock().now();
  const std::string w = " window=" + std::to_string(start) + ".." +
                        std::to_string(start + kCampaign) + "\n";
  const std::string officer = "approval(health-ministry,y,contact-tracer)";
  const std::string head =
      "rule priority=10 te=name:ct-trace requester=health-officer(y) ";
  auto rule = [&](const std::string& id, const std::string& data,
                  const std::string& predicates) {
    return "rule id=" + id + head.substr(4) + "data=" + data +
           " requires=" + predicates + w;
  };
  return "# Contact-tracing campaign regulator.\n" +
         rule("ct-report", "CT/InfectionReport(x)",
              "consent(x,report-infection,HealthAuthority);" + officer) +
         rule("ct-upload", "CT/Upload(x)",
              "consent(x,contact-trace,HealthAuthority);" + officer) +
         rule("ct-token-key", "CT/TokenKey", officer) +
         rule("ct-directory", "CT/PhoneDirectory", officer);
}

std::string ct_default_manifest() {
  return "name = ct-trace\nversion = 1\n"
         "input_types = CT/InfectionReport(x), CT/TokenKey, CT/PhoneDirectory, "
         "CT/Upload(x)\n"
         "output_types = CT/Notification\nsink = true\n"
         "minimisation_policy = projection\n"
         "minimisation_policy.allowed_fields = phone,message\n"
         "minimisation_policy.aggregate_only = false\n"
         "minimisation_policy.notification_template = " +
         std::string(kDefaultNotification) + "\ncallback = true\n";
}

std::string ct_default_script() {
  return R"(# Attack 5: a phone that suppresses uploads is flagged.
collect silent=7 expect=flagged:1
# Attack 1: broadcast tokens reveal no identity or coordinates.
eavesdrop expect=hits:0
report agent=0 doctor=genuine consent=true expect=queued
# Attack 2: an officer without the ministry's approval.
trace expect=deny:PREDICATE_MISSING
approve-officer expect=STORED
# Attack 3: a modified trace TE exporting the contact graph.
trace tampered=true expect=deny:TE_UNKNOWN
trace expect=notified
# Attack 4: coordinates forged under another vid, then a forged report.
forge attacker=5 victim=6 near=0 expect=injected:2
trace expect=notified
report agent=1 doctor=forged consent=true expect=queued
trace expect=rejected:BAD_DOCTOR_SIGNATURE
# Without the person's consent to use the report, nothing is traced.
report agent=2 doctor=genuine consent=false expect=queued
trace expect=deny:PREDICATE_MISSING
)";
}

CtConfig CtConfig::from_kv(const KvDocument& doc) {
  CtConfig c;
  for (const KvEntry& e : doc.entries()) {
    const std::string where = "line " + std::to_string(e.line);
    auto positive_double = [&] {
      const double v = parse_double(e.value, where);
      if (v < 0) throw Error(ErrorCode::kConfig, where + ": negative " + e.key);
      return v;
    };
    if (e.key == "scenario" || e.key == "script") continue;
    if (e.key == "agents") {
      c.agents = static_cast<std::size_t>(parse_positive(e));
    } else if (e.key == "periods") {
      c.periods = static_cast<std::size_t>(parse_positive(e));
    } else if (e.key == "area_m") {
      c.area_m = positive_double();
    } else if (e.key == "step_m") {
      c.step_m = positive_double();
    } else if (e.key == "ble_range_m") {
      c.ble_range_m = positive_double();
    } else if (e.key == "sample_period_s") {
      c.sample_period_s = parse_positive(e);
    } else if (e.key == "upload_period_s") {
      c.upload_period_s = parse_positive(e);
    } else if (e.key == "epsilon") {
      c.epsilon = positive_double();
    } else if (e.key == "delta") {
      std::int64_t v = 0;
      try {
        v = parse_int(e.value);
      } catch (const Error&) {
        throw Error(ErrorCode::kConfig, where + ": bad delta");
      }
      if (v < 0) throw Error(ErrorCode::kConfig, where + ": negative delta");
      c.delta = v;
    } else if (e.key == "window") {
      c.window = parse_positive(e);
    } else if (e.key == "rsa_bits") {
      c.rsa_bits = static_cast<int>(parse_positive(e));
    } else if (e.key == "trajectories") {
      c.trajectories = e.value;
    } else {
      unknown_key(e);
    }
  }
  return c;
}

struct CtWorld::Runtime {
  te::Platform platform;
  te::TeRuntime runtime;

  Runtime(Rng& rng, te::ChannelTap* tap)
      : platform("ct-server-platform", rng),
        runtime(platform, rng.fork("ct-runtime"), tap) {}
};

CtWorld::CtWorld(const CtConfig& config, std::uint64_t seed)
    : config_(config),
      rng_(seed),
      authority_("identity-authority", rng_.fork("authority")),
      reg_(std::make_unique<regulator::Regulator>("CT-R", rng_.fork("regulator"),
                                                  clock_, authority_)),
      ministry_("health-ministry", rng_.fork("ministry"), config.rsa_bits),
      doctor_(crypto::generate_signing_keypair(rng_)),
      operator_(crypto::generate_signing_keypair(rng_)),
      token_key_(crypto::generate_box_keypair(rng_)),
      officer_(enroll_party(authority_, "officer-0", std::string(kHealthAuthority))),
      rt_(std::make_unique<Runtime>(rng_, &tap_)),
      dropped_(std::make_shared<std::size_t>(0)) {
  reg_->trust_platform(rt_->platform.id(), rt_->platform.public_key());
  reg_->load_rules(regulator::RuleSet::parse(config_.rules));
  reg_->trust_approver("health-ministry", "contact-tracer",
                       ministry_.public_key("contact-tracer"));

  trace_te_.manifest = te::Manifest::parse(config_.manifest);
  trace_te_.code = code_image(trace_te_.manifest);
  const Bytes authority_pk = authority_.signing_public_key();
  const Bytes doctor_pk = doctor_.public_key;
  const std::string message =
      trace_te_.manifest.minimisation &&
              trace_te_.manifest.minimisation->notification_template
          ? *trace_te_.manifest.minimisation->notification_template
          : std::string(kDefaultNotification);
  auto dropped = dropped_;
  trace_te_.logic = [authority_pk, doctor_pk, message, dropped](
                        const std::vector<TypedValue>& in, const Record& params) {
    std::vector<CtUpload> uploads;
    std::optional<InfectionReport> report;
    Bytes token_private;
    std::map<Digest, std::string> phones;
    for (const TypedValue& v : in) {
      const std::string& name = v.type.name();
      if (name == kUploadType.name()) {
        uploads.push_back(CtUpload::parse(as_bytes(v.record.at("batch"))));
      } else if (name == kReportType.name()) {
        report = InfectionReport::parse(as_bytes(v.record.at("report")));
      } else if (name == kTokenKeyType.name()) {
        token_private = to_bytes(v.record.at("private_key"));
      } else if (name == kDirectoryType.name()) {
        for (const auto& [vid, phone] : v.record) {
          phones[digest_from_hex(vid)] = phone;
        }
      }
    }
    std::vector<TypedValue> out;
    if (!report) return out;
    const ServerRecords server = server_records(uploads, authority_pk, token_private);
    *dropped = server.dropped;
    TraceQueryParams p;
    p.epsilon = parse_double(params.at("epsilon"), "epsilon");
    p.delta = parse_int(params.at("delta"));
    p.window = parse_int(params.at("window"));
    p.now = parse_int(params.at("now"));
    const auto contacts = ct_trace(*report, doctor_pk, p, server.records);
    for (const Notification& n : ct_notify(contacts, phones, message)) {
      out.push_back({kNotificationType, std::nullopt,
                     {{"phone", n.phone}, {"message", n.message}}});
    }
    return out;
  };
  reg_->approve_te(trace_te_.manifest, trace_te_.code,
                   "point-threshold contact query, template notifications");

  for (std::size_t i = 0; i < config_.agents; ++i) {
    CtAgent a{enroll_party(authority_, "ct-user-" + std::to_string(i),
                           std::string(kApp)),
              "+1-555-" + std::to_string(100000 + i), true};
    reg_->record_consent(regulator::sign_consent(
        a.party.cert, a.party.key, "contact-trace", std::string(kHealthAuthority),
        {crypto::TypePattern::parse("CT/Upload")}, clock_.now() + kCampaign, rng_));
    agents_.push_back(std::move(a));
  }

  if (config_.trajectories) {
    points_ = parse_trajectories(read_file(config_.trajectories->string()));
  } else {
    Rng walk = rng_.fork("trajectories");
    points_ = random_walk(config_.agents, config_.periods, clock_.now(),
                          config_.sample_period_s, config_.area_m, config_.step_m,
                          walk);
  }

  Rng keys = rng_.fork("ct-store");
  crypto::AeadKey storage;
  keys.fill(storage);
  store_ = std::make_unique<store::EncryptedStore>(keys.digest(), storage);
}

CtWorld::~CtWorld() = default;

Timestamp CtWorld::now() const { return clock_.now(); }

std::optional<Digest> CtWorld::reported() const { return reported_; }

std::set<Digest> CtWorld::collect(const std::set<std::size_t>& silent) {
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    agents_[i].uploads = !silent.contains(i);
  }
  collection_ = ct_collect(agents_, points_, config_.ble_range_m,
                           config_.sample_period_s, config_.upload_period_s,
                           token_key_.public_key, rng_);
  Timestamp last = clock_.now();
  for (const auto& p : points_) last = std::max(last, p.time);
  clock_.set(last);
  for (const CtUpload& u : collection_.uploads) {
    std::size_t who = agents_.size();
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      if (agents_[i].party.vid.value == u.certificate.vid) who = i;
    }
    const crypto::Envelope env = crypto::seal(
        kUploadType, u.certificate.vid, te::encode_record({{"batch", pbd::to_string(u.serialize())}}),
        reg_->public_key(), agents_.at(who).party.key, rng_);
    tap_.record("upload", env.serialize());
    store_->put(env, agents_[who].party.key.public_key);
  }
  std::vector<Digest> registered;
  for (const auto& a : agents_) registered.push_back(a.party.vid.value);
  return flag_silent_devices(registered, collection_.uploads, clock_.now(),
                             config_.upload_period_s);
}

void CtWorld::report(std::size_t i, bool genuine, bool consent) {
  const Party& p = agents_.at(i).party;
  const crypto::KeyPair signer =
      genuine ? doctor_ : crypto::generate_signing_keypair(rng_);
  const InfectionReport r = sign_infection_report(p.vid.value, "positive", signer);
  if (consent) {
    reg_->record_consent(regulator::sign_consent(
        p.cert, p.key, "report-infection", std::string(kHealthAuthority),
        {crypto::TypePattern::parse("CT/InfectionReport")},
        clock_.now() + kCampaign, rng_));
  }
  report_ = te::Delivery{
      crypto::seal(kReportType, p.vid.value,
                   te::encode_record({{"report", pbd::to_string(r.serialize())}}),
                   reg_->public_key(), signer, rng_),
      signer.public_key};
  reported_ = p.vid.value;
}

regulator::ApprovalOutcome CtWorld::approve_officer() {
  ministry_.record_evidence("contact-tracer", officer_.vid.value);
  return reg_->record_approval({ministry_.issue_plain(officer_.vid.value,
                                                      "contact-tracer"),
                                regulator::ApprovalVia::kDirect});
}

TraceOutcome CtWorld::trace(bool tampered) {
  TraceOutcome out;
  if (!report_) {
    out.outcome = "none";
    return out;
  }
  te::TeInstance t = trace_te_;
  if (tampered) t.code.back() ^= 0x01;

  std::vector<te::Delivery> inputs{*report_};
  inputs.push_back({crypto::seal(kTokenKeyType, std::nullopt,
                                 te::encode_record({{"private_key",
                                                     pbd::to_string(token_key_.private_key)}}),
                                 reg_->public_key(), operator_, rng_),
                    operator_.public_key});
  Record directory;
  for (const auto& a : agents_) directory[hex(a.party.vid.value)] = a.phone;
  inputs.push_back({crypto::seal(kDirectoryType, std::nullopt,
                                 te::encode_record(directory), reg_->public_key(),
                                 operator_, rng_),
                    operator_.public_key});
  const Digest measurement = t.measurement();
  for (const auto& a : agents_) {
    for (const auto& s : store_->get(a.party.vid.value, kUploadType, measurement)) {
      inputs.push_back({s.envelope, s.producer_public_key});
    }
  }

  te::RunOptions o;
  o.requester = te::Requester{"health-officer", officer_.cert, officer_.key,
                              std::nullopt};
  o.params = {{"epsilon", format_double(config_.epsilon)},
              {"delta", std::to_string(config_.delta)},
              {"window", std::to_string(config_.window)},
              {"now", std::to_string(clock_.now())}};
  *dropped_ = 0;
  try {
    const te::RunResult r = rt_->runtime.run(t, inputs, *reg_, o);
    out.notifications = r.sink_rows;
    out.outcome = r.sink_rows.empty()
                      ? "none"
                      : "notified:" + std::to_string(r.sink_rows.size());
    for (const auto& row : r.sink_rows) phones_sent_.push_back(row.at("phone"));
  } catch (const te::AccessDenied& e) {
    out.outcome = "deny:" + std::string(regulator::to_string(e.reason()));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kBadDoctorSignature) throw;
    out.outcome = "rejected:BAD_DOCTOR_SIGNATURE";
  }
  out.dropped = *dropped_;
  return out;
}

std::size_t CtWorld::forge(std::size_t attacker, std::size_t victim,
                           std::size_t near) {
  const Party& mal = agents_.at(attacker).party;
  const Party& vic = agents_.at(victim).party;
  const Party& target = agents_.at(near).party;
  const auto it = std::find_if(points_.begin(), points_.end(),
                               [near](const auto& p) { return p.agent == near; });
  if (it == points_.end()) throw Error(ErrorCode::kConfig, "agent has no samples");

  // Claims the victim stood next to the target, signed with the attacker's
  // key under the victim's (public) certificate.
  CtUpload u;
  u.certificate = vic.cert;
  u.uploaded_at = clock_.now();
  u.gps.push_back(sign_gps_record(vic.vid.value, it->x, it->y, it->time, mal.key));
  const ContactRecord fake =
      sign_gps_record(target.vid.value, it->x, it->y, it->time, mal.key);
  u.receipts.push_back(make_receipt(
      vic.vid.value, make_token(target.cert, fake, token_key_.public_key, rng_),
      mal.key));
  const crypto::Envelope env =
      crypto::seal(kUploadType, vic.vid.value,
                   te::encode_record({{"batch", pbd::to_string(u.serialize())}}),
                   reg_->public_key(), mal.key, rng_);
  tap_.record("upload", env.serialize());
  store_->put(env, mal.key.public_key);
  return u.gps.size() + u.receipts.size();
}

std::size_t CtWorld::eavesdrop_hits() const {
  std::set<Digest> vids;
  for (const auto& a : agents_) vids.insert(a.party.vid.value);
  std::size_t hits = 0;
  for (const BroadcastToken& b : collection_.broadcast) {
    bool hit = false;
    for (std::size_t off = 0; !hit && off + 32 <= b.token.size(); ++off) {
      Digest window;
      std::copy_n(b.token.begin() + static_cast<std::ptrdiff_t>(off), 32,
                  window.begin());
      hit = vids.contains(window);
    }
    const Party& sender = agents_.at(b.sender).party;
    hit = hit || contains(b.token, as_bytes(hex(sender.vid.value))) ||
          contains(b.token, as_bytes(std::to_string(b.time)));
    for (const auto& p : points_) {
      if (hit || p.agent != b.sender || p.time != b.time) continue;
      Bytes x, y;
      append_u64_be(x, bits(p.x));
      append_u64_be(y, bits(p.y));
      hit = contains(b.token, x) || contains(b.token, y);
    }
    hits += hit;
  }
  return hits;
}

ScenarioResult ct_run(const CtConfig& config, const Script& script,
                      std::uint64_t seed) {
  CtWorld w(config, seed);
  ScenarioResult out;
  out.scenario = "contact-tracing";
  std::size_t forged = 0;
  std::optional<TraceOutcome> after_forge;
  std::vector<te::Record> rows;
  auto index_arg = [&](const ScriptStep& s, const std::string& key) {
    const std::int64_t v = s.int_arg(key);
    if (v < 0 || static_cast<std::size_t>(v) >= w.agents().size()) {
      throw Error(ErrorCode::kConfig,
                  "line " + std::to_string(s.line) + ": no agent " + std::to_string(v));
    }
    return static_cast<std::size_t>(v);
  };
  for (const ScriptStep& s : script.steps) {
    std::string outcome;
    if (s.action == "collect") {
      std::set<std::size_t> silent;
      for (const auto& part : split(s.arg_or("silent", ""), ',')) {
        if (trim(part).empty()) continue;
        const std::int64_t v = parse_int(trim(part));
        if (v < 0 || static_cast<std::size_t>(v) >= w.agents().size()) {
          throw Error(ErrorCode::kConfig, "line " + std::to_string(s.line) +
                                              ": silent index out of range");
        }
        silent.insert(static_cast<std::size_t>(v));
      }
      outcome = "flagged:" + std::to_string(w.collect(silent).size());
    } else if (s.action == "eavesdrop") {
      outcome = "hits:" + std::to_string(w.eavesdrop_hits());
    } else if (s.action == "report") {
      const std::string doctor = s.arg_or("doctor", "genuine");
      if (doctor != "genuine" && doctor != "forged") {
        throw Error(ErrorCode::kConfig,
                    "line " + std::to_string(s.line) + ": doctor=genuine|forged");
      }
      w.report(index_arg(s, "agent"), doctor == "genuine",
               parse_bool(s.arg_or("consent", "true")));
      outcome = "queued";
    } else if (s.action == "approve-officer") {
      outcome = std::string(regulator::to_string(w.approve_officer()));
    } else if (s.action == "trace") {
      TraceOutcome t = w.trace(parse_bool(s.arg_or("tampered", "false")));
      outcome = t.outcome;
      // Any notification count satisfies a bare `notified` expectation.
      if (s.expect == "notified" && outcome.rfind("notified:", 0) == 0) {
        outcome = "notified";
      }
      rows.insert(rows.end(), t.notifications.begin(), t.notifications.end());
      if (forged > 0 && !after_forge) after_forge = std::move(t);
    } else if (s.action == "forge") {
      after_forge.reset();
      forged += w.forge(index_arg(s, "attacker"), index_arg(s, "victim"),
                        index_arg(s, "near"));
      outcome = "injected:" + std::to_string(forged);
    } else {
      unknown_action(s);
    }
    out.steps.push_back({s.line, s.action, outcome, s.expect});
  }

  const std::vector<const regulator::Regulator*> regs{&w.regulator()};
  tally_decisions(w.regulator(), out.decisions);
  out.audit_logs[w.regulator().name()] = w.regulator().audit().serialize();
  out.transcript = transcript_lines(w.tap(), regs);

  // Notifications carry the template and a phone number, nothing else.
  const std::string message = [&] {
    const te::Manifest m = te::Manifest::parse(config.manifest);
    return m.minimisation && m.minimisation->notification_template
               ? *m.minimisation->notification_template
               : std::string(kDefaultNotification);
  }();
  std::size_t bad_rows = 0;
  for (const auto& row : rows) {
    const bool shape = row.size() == 2 && row.contains("phone") &&
                       row.at("message") == message;
    bool leak = false;
    if (w.reported()) {
      const std::string vid_hex = hex(*w.reported());
      for (const auto& [k, v] : row) {
        leak = leak || v.find(vid_hex) != std::string::npos ||
               contains(as_bytes(v), *w.reported());
      }
    }
    for (const auto& p : w.trajectories()) {
      leak = leak || row.at("phone").find(std::to_string(p.time)) != std::string::npos;
    }
    bad_rows += !shape || leak;
  }
  out.invariants.push_back({"notifications-template-only", bad_rows == 0,
                            std::to_string(rows.size()) + " notifications, " +
                                std::to_string(bad_rows) + " bad"});
  out.invariants.push_back({"tokens-opaque", w.eavesdrop_hits() == 0,
                            std::to_string(w.collection().broadcast.size()) +
                                " tokens scanned"});
  if (forged > 0) {
    const bool dropped = after_forge && after_forge->dropped >= forged;
    out.invariants.push_back(
        {"forged-records-dropped", dropped,
         after_forge ? std::to_string(after_forge->dropped) + " dropped of " +
                           std::to_string(forged)
                     : "no trace after the forgery"});
  }
  add_common_invariants(out, regs);

  std::string all;
  for (const auto& row : rows) all += row.at("phone") + "\n";
  out.output_digests["notified-phones"] = hex(crypto::hash(all));
  return out;
}

}  // namespace pbd::scenarios
