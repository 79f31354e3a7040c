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
//
// Centralised contact tracing. Phones (running the app as a TE) sign GPS
// samples against their app vid and swap ephemeral tokens over BLE; tokens
// are encrypted to a regulator-controlled token key. Uploads land at the
// server encrypted; an approved trace TE matches an infected person's
// records against everyone else's and emits template-only notifications.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pbd/common/clock.hpp"
#include "pbd/common/kv.hpp"
#include "pbd/identity/credential.hpp"
#include "pbd/identity/identity.hpp"
#include "pbd/regulator/regulator.hpp"
#include "pbd/scenarios/common.hpp"
#include "pbd/scenarios/script.hpp"
#include "pbd/store/store.hpp"
#include "pbd/te/runtime.hpp"

namespace pbd::scenarios {

enum class ContactOrigin : std::uint8_t { kGps = 1, kBle = 2 };
std::string_view to_string(ContactOrigin origin);

// A spatiotemporal point held by the server. GPS records are signed by the
// device; BLE records are derived from a receipt and carry the receipt
// signature, with the location and time copied from the token.
struct ContactRecord {
  Digest vid{};
  double x = 0;  // planar metres
  double y = 0;
  Timestamp time = 0;
  ContactOrigin origin = ContactOrigin::kGps;
  Bytes signature;

  Bytes signed_portion() const;  // "CTR0"
  Bytes serialize() const;       // "CTR1"
  // Throws Error(kMalformed).
  static ContactRecord parse(ByteView data);
  bool operator==(const ContactRecord&) const = default;
};

ContactRecord sign_gps_record(const Digest& vid, double x, double y,
                              Timestamp time, const crypto::KeyPair& device);

// Token = box_seal(token key, "TOK1"(sender certificate, signed GPS record)).
Bytes make_token(const identity::VidKeyCertificate& sender,
                 const ContactRecord& gps, ByteView token_public_key, Rng& rng);

// The receiver's signature over (own vid, token).
struct Receipt {
  Digest receiver{};
  Bytes token;
  Bytes signature;

  Bytes signed_portion() const;  // "RCP0"
  Bytes serialize() const;       // "RCP1"
  static Receipt parse(ByteView data);
};

Receipt make_receipt(const Digest& receiver, Bytes token,
                     const crypto::KeyPair& device);

// One batch from one device.
struct CtUpload {
  identity::VidKeyCertificate certificate;
  Timestamp uploaded_at = 0;
  std::vector<ContactRecord> gps;
  std::vector<Receipt> receipts;

  Bytes serialize() const;  // "UPL1"
  static CtUpload parse(ByteView data);
};

// Trajectory text: one `agent_index t x y` sample per line, `#` comments.
struct TrajectoryPoint {
  std::size_t agent = 0;
  Timestamp time = 0;
  double x = 0;
  double y = 0;
};

// Throws Error(kConfig) naming the line.
std::vector<TrajectoryPoint> parse_trajectories(std::string_view text);
std::string format_trajectories(const std::vector<TrajectoryPoint>& points);

// Reflecting random walk in [0, area]^2; one sample per agent per period.
std::vector<TrajectoryPoint> random_walk(std::size_t agents, std::size_t periods,
                                         Timestamp start, Timestamp period,
                                         double area_m, double step_m, Rng& rng);

struct CtAgent {
  Party party;
  std::string phone;
  // False models a device that suppresses its uploads.
  bool uploads = true;
};

struct BleExchange {
  std::size_t sender = 0;
  std::size_t receiver = 0;
  Timestamp time = 0;
};

struct BroadcastToken {
  std::size_t sender = 0;
  Timestamp time = 0;
  Bytes token;
};

struct CtCollection {
  std::vector<CtUpload> uploads;
  std::vector<BleExchange> exchanges;  // ground truth, one per direction
  std::vector<BroadcastToken> broadcast;
  std::size_t gps_records = 0;
};

// Samples are taken at times `t0 + k * sample_period_s` (t0 the earliest
// trajectory time); other points are ignored. Pairs within ble_range_m at a
// sample swap tokens both ways. Devices upload every upload_period_s and
// once more at the last sample.
CtCollection ct_collect(const std::vector<CtAgent>& agents,
                        const std::vector<TrajectoryPoint>& trajectories,
                        double ble_range_m, Timestamp sample_period_s,
                        Timestamp upload_period_s, ByteView token_public_key,
                        Rng& rng);

struct ServerRecords {
  std::vector<ContactRecord> records;
  std::size_t dropped = 0;  // records failing any signature or binding check
};

// Verifies certificates against the authority, GPS signatures against the
// certified key, receipts against the receiver, and the token contents
// against the sender. Anything that fails is dropped.
ServerRecords server_records(const std::vector<CtUpload>& uploads,
                             ByteView authority_public_key,
                             ByteView token_private_key);

// Registered vids with no upload in (now - upload_period_s, now].
std::set<Digest> flag_silent_devices(const std::vector<Digest>& registered,
                                     const std::vector<CtUpload>& uploads,
                                     Timestamp now, Timestamp upload_period_s);

struct TraceQueryParams {
  double epsilon = 10;  // metres, Euclidean
  Timestamp delta = 300;  // seconds, absolute difference
  Timestamp window = 14 * 86400;  // infection window
  Timestamp now = 0;

  // epsilon and delta may be 0 (exact collision); window must be positive.
  // Throws Error(kInvalidArgument).
  void validate() const;
};

struct InfectionReport {
  Digest vid{};
  std::string report;
  Bytes doctor_signature;

  Bytes signed_portion() const;  // "IRP0"
  Bytes serialize() const;       // "IRP1"
  static InfectionReport parse(ByteView data);
};

InfectionReport sign_infection_report(const Digest& vid, std::string report,
                                      const crypto::KeyPair& doctor);

// Uniform grid over (x, y, time). A query scans every cell that can hold a
// point within epsilon and delta, which is the 3x3x3 neighbourhood when the
// cell equals epsilon and the bucket equals delta. Exact for any parameters.
class GridIndex {
 public:
  GridIndex(std::vector<ContactRecord> records, double cell_m,
            Timestamp bucket_s);

  // Every v != infected with a record within epsilon and delta of one of
  // the infected's records timed in [now - window, now].
  std::set<Digest> contacts(const Digest& infected,
                            const TraceQueryParams& params) const;

  std::size_t size() const { return records_.size(); }

 private:
  struct Cell {
    std::int64_t x, y, t;
    bool operator==(const Cell&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const Cell& c) const;
  };
  Cell cell_of(double x, double y, Timestamp t) const;

  std::vector<ContactRecord> records_;
  double cell_;
  Timestamp bucket_;
  std::unordered_map<Cell, std::vector<std::uint32_t>, CellHash> cells_;
  std::map<Digest, std::vector<std::uint32_t>> by_vid_;
};

// Verifies the doctor's signature (Error(kBadDoctorSignature)) and the
// parameters, then queries a grid sized to the parameters.
std::set<Digest> ct_trace(const InfectionReport& report,
                          ByteView doctor_public_key,
                          const TraceQueryParams& params,
                          const std::vector<ContactRecord>& records);
std::set<Digest> ct_trace(const InfectionReport& report,
                          ByteView doctor_public_key,
                          const TraceQueryParams& params, const GridIndex& index);

struct Notification {
  std::string phone;
  std::string message;
  bool operator==(const Notification&) const = default;
};

// One template message per contact with a registered phone.
std::vector<Notification> ct_notify(const std::set<Digest>& contacts,
                                    const std::map<Digest, std::string>& phones,
                                    const std::string& template_text);

inline constexpr std::string_view kDefaultNotification =
    "You were recently near someone who tested positive. Please get tested.";

std::string ct_default_rules();
std::string ct_default_manifest();
std::string ct_default_script();

struct CtConfig {
  std::size_t agents = 200;
  std::size_t periods = 50;
  double area_m = 1000;
  double step_m = 25;
  double ble_range_m = 15;
  Timestamp sample_period_s = 300;
  Timestamp upload_period_s = 4 * 3600;
  double epsilon = 10;
  Timestamp delta = 300;
  Timestamp window = 14 * 86400;
  int rsa_bits = 2048;
  std::optional<std::filesystem::path> trajectories;
  std::string rules = ct_default_rules();
  std::string manifest = ct_default_manifest();

  // Keys: the numeric fields above by name, plus trajectories (a path).
  static CtConfig from_kv(const KvDocument& doc);
};

struct TraceOutcome {
  std::string outcome;  // "notified:<n>", "none", "deny:<REASON>", "rejected:<code>"
  std::vector<te::Record> notifications;
  std::size_t dropped = 0;
};

class CtWorld {
 public:
  CtWorld(const CtConfig& config, std::uint64_t seed);
  ~CtWorld();

  CtWorld(const CtWorld&) = delete;
  CtWorld& operator=(const CtWorld&) = delete;

  // Runs collection, seals each upload as CT/Upload(vid) and stores it.
  // Returns the flagged (silent) devices.
  std::set<Digest> collect(const std::set<std::size_t>& silent = {});

  // A doctor certifies agent `i`; `genuine` false signs with an unregistered
  // key. `consent` records the agent's consent to the report's use.
  void report(std::size_t i, bool genuine, bool consent);
  regulator::ApprovalOutcome approve_officer();

  // Runs the trace TE on the pending report; `tampered` flips a code byte.
  TraceOutcome trace(bool tampered = false);

  // Uploads a batch from `attacker` claiming `victim`'s vid at `near`'s
  // first location. Returns the number of forged records.
  std::size_t forge(std::size_t attacker, std::size_t victim, std::size_t near);

  // Broadcast tokens that contain any agent's vid or raw coordinates.
  std::size_t eavesdrop_hits() const;

  const std::vector<CtAgent>& agents() const { return agents_; }
  const CtCollection& collection() const { return collection_; }
  const std::vector<TrajectoryPoint>& trajectories() const { return points_; }
  std::optional<Digest> reported() const;
  regulator::Regulator& regulator() { return *reg_; }
  te::ChannelTap& tap() { return tap_; }
  const std::vector<std::string>& sink_phones() const { return phones_sent_; }
  Timestamp now() const;

 private:
  struct Runtime;

  CtConfig config_;
  Rng rng_;
  ManualClock clock_;
  identity::IdentityAuthority authority_;
  std::unique_ptr<regulator::Regulator> reg_;
  identity::CredentialIssuer ministry_;
  crypto::KeyPair doctor_;
  crypto::KeyPair operator_;
  crypto::BoxKeyPair token_key_;
  Party officer_;
  te::ChannelTap tap_;
  std::unique_ptr<Runtime> rt_;
  std::unique_ptr<store::EncryptedStore> store_;
  te::TeInstance trace_te_;
  std::vector<CtAgent> agents_;
  std::vector<TrajectoryPoint> points_;
  CtCollection collection_;
  std::optional<te::Delivery> report_;
  std::optional<Digest> reported_;
  std::vector<std::string> phones_sent_;
  std::shared_ptr<std::size_t> dropped_;
};

ScenarioResult ct_run(const CtConfig& config, const Script& script,
                      std::uint64_t seed);

}  // namespace pbd::scenarios
