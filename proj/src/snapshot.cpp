#include <array>
#include <bit>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <string>

#include "compass/engine.hpp"

namespace compass {

namespace {

constexpr std::array<char, 8> magic = {'C', 'M', 'P', 'S', 'S', 'N', 'A', 'P'};

std::uint64_t fnv1a(std::span<const std::byte> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<std::byte>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) {
    u64(s.size());
    for (char c : s) out_.push_back(static_cast<std::byte>(c));
  }
  std::vector<std::byte>& data() { return out_; }

 private:
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
  }
  std::vector<std::byte> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes() {
    const std::uint64_t n = u64();
    if (n > in_.size() - pos_) fail("string length exceeds snapshot size");
    const auto raw = take(static_cast<std::size_t>(n));
    std::string s(raw.size(), '\0');
    std::memcpy(s.data(), raw.data(), raw.size());
    return s;
  }
  std::uint64_t count(std::size_t min_item_size) {
    const std::uint64_t n = u64();
    if (min_item_size && n > (in_.size() - pos_) / min_item_size) fail("element count exceeds snapshot size");
    return n;
  }
  std::size_t position() const { return pos_; }

  [[noreturn]] static void fail(const std::string& why) {
    throw std::runtime_error("corrupt snapshot: " + why);
  }

 private:
  std::span<const std::byte> take(std::size_t n) {
    if (n > in_.size() - pos_) fail("truncated");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t le(int width) {
    const auto raw = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
    return v;
  }

  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

void write_event(Writer& w, const Event& ev) {
  w.f64(ev.time);
  w.u32(ev.edge);
  w.u8(static_cast<std::uint8_t>(ev.tie));
}

Event read_event(Reader& r) {
  Event ev;
  ev.time = r.f64();
  ev.edge = r.u32();
  const std::uint8_t tie = r.u8();
  if (tie != 1 && tie != 2) Reader::fail("invalid tie bit");
  ev.tie = static_cast<TieBit>(tie);
  return ev;
}

}  // namespace

std::vector<std::byte> snapshot(const SimState& state, const EventStream& stream) {
  Writer w;
  for (char c : magic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(snapshot_version);
  w.u8(static_cast<std::uint8_t>(state.space));
  w.u8(static_cast<std::uint8_t>(state.graph->kind()));
  w.f64(state.params.mu);
  w.f64(state.params.theta);
  w.f64(state.clock);
  w.u64(state.events_applied);

  const Graph& g = *state.graph;
  w.u64(g.vertex_count());
  w.u64(g.edge_count());
  for (const Edge& e : g.edges()) {
    w.u32(e.tail);
    w.u32(e.head);
  }
  w.u64(g.dims().size());
  for (std::size_t d : g.dims()) w.u64(d);
  for (double x : state.opinions) w.f64(x);

  w.u8(stream.poisson_ ? 0 : 1);
  w.u64(stream.seed_);
  if (stream.poisson_) {
    std::ostringstream text;
    text << stream.rng_;
    w.bytes(text.str());
  } else {
    w.u64(stream.cursor_);
    w.u64(stream.script_.size());
    for (const Event& ev : stream.script_) write_event(w, ev);
  }
  w.u8(stream.pending_ ? 1 : 0);
  if (stream.pending_) write_event(w, *stream.pending_);

  auto& out = w.data();
  const std::uint64_t checksum = fnv1a(out);
  w.u64(checksum);
  return std::move(out);
}

struct SnapshotReader {
  static Restored read(std::span<const std::byte> bytes) {
    if (bytes.empty()) throw std::runtime_error("corrupt snapshot: empty input");
    if (bytes.size() < magic.size() + 4 + 8) Reader::fail("truncated header");
    Reader r(bytes);
    for (char c : magic) {
      if (r.u8() != static_cast<std::uint8_t>(c)) Reader::fail("bad magic");
    }
    const std::uint32_t version = r.u32();
    if (version != snapshot_version) {
      throw std::runtime_error("snapshot version " + std::to_string(version) +
                               " not supported (expected " + std::to_string(snapshot_version) + ")");
    }
    const auto body = bytes.first(bytes.size() - 8);
    Reader tail(bytes.subspan(bytes.size() - 8));
    if (fnv1a(body) != tail.u64()) Reader::fail("checksum mismatch");
    Reader in(body.subspan(r.position()));

    const std::uint8_t space = in.u8();
    if (space > 1) Reader::fail("invalid opinion space");
    const std::uint8_t kind = in.u8();
    if (kind > 3) Reader::fail("invalid graph kind");
    ModelParams params;
    params.mu = in.f64();
    params.theta = in.f64();
    const double clock = in.f64();
    const std::uint64_t events_applied = in.u64();

    const std::uint64_t n = in.u64();
    const std::uint64_t m = in.count(8);
    if (n > std::numeric_limits<VertexId>::max()) Reader::fail("vertex count too large");
    std::vector<Edge> edges(m);
    for (Edge& e : edges) {
      e.tail = in.u32();
      e.head = in.u32();
    }
    std::vector<std::size_t> dims(in.count(8));
    for (std::size_t& d : dims) d = in.u64();
    if (n > (body.size()) / 8) Reader::fail("vertex count exceeds snapshot size");
    std::vector<double> opinions(n);
    for (double& x : opinions) x = in.f64();

    SimState state;
    try {
      params.validate();
      state.graph = std::make_shared<const Graph>(n, std::move(edges), static_cast<GraphKind>(kind),
                                                  std::move(dims));
    } catch (const std::invalid_argument& e) {
      Reader::fail(e.what());
    }
    state.space = static_cast<OpinionSpace>(space);
    state.params = params;
    state.clock = clock;
    state.events_applied = events_applied;
    state.opinions = std::move(opinions);

    EventStream stream;
    const std::uint8_t mode = in.u8();
    if (mode > 1) Reader::fail("invalid stream mode");
    stream.poisson_ = mode == 0;
    stream.seed_ = in.u64();
    if (stream.poisson_) {
      std::istringstream text(in.bytes());
      text >> stream.rng_;
      if (!text) Reader::fail("unreadable generator state");
    } else {
      stream.cursor_ = in.u64();
      stream.script_.resize(in.count(13));
      for (Event& ev : stream.script_) ev = read_event(in);
      if (stream.cursor_ > stream.script_.size()) Reader::fail("script cursor out of range");
    }
    const std::uint8_t has_pending = in.u8();
    if (has_pending > 1) Reader::fail("invalid pending flag");
    if (has_pending) stream.pending_ = read_event(in);
    if (in.position() != body.size() - r.position()) Reader::fail("trailing bytes");
    return {std::move(state), std::move(stream)};
  }
};

Restored restore(std::span<const std::byte> bytes) { return SnapshotReader::read(bytes); }

}  // namespace compass
