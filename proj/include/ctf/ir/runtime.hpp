#pragma once

#include <functional>
#include <optional>
#include <unordered_map>

#include "ctf/ir/address.hpp"
#include "ctf/ir/distribution.hpp"
#include "ctf/ir/value.hpp"

namespace ctf {

/// Per-execution side store, keyed by (relative address, level). Holds the
/// values of lifted random choices and the scores of lifted factors, plus the
/// dynamically scoped `level` and `base` entries.
class Store {
 public:
  int level = 0;
  Address base;

  const Value* find_value(const Address& rel, int lvl) const;
  void put_value(const Address& rel, int lvl, Value v);

  std::optional<double> find_score(const Address& rel, int lvl) const;
  void put_score(const Address& rel, int lvl, double s);

  std::size_t size() const { return values_.size() + scores_.size(); }
  void clear();

 private:
  struct Key {
    Address rel;
    int level;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return hash_combine(k.rel.hash(), static_cast<std::size_t>(k.level)); }
  };

  std::unordered_map<Key, Value, KeyHash> values_;
  std::unordered_map<Key, double, KeyHash> scores_;
};

/// Effect interface handed to a running model. Every effect is tagged with
/// the address current at its call site; `call` pushes a call-site label for
/// the duration of a nested computation.
class RuntimeHandle {
 public:
  virtual ~RuntimeHandle() = default;

  Value sample(Site site, const Distribution& d);
  void factor(Site site, double score);

  template <class F>
  decltype(auto) call(Site site, F&& body) {
    Frame frame(*this, site);
    return std::forward<F>(body)();
  }

  const Address& current_address() const { return stack_; }
  Store& store() { return store_; }
  const Store& store() const { return store_; }

 protected:
  virtual Value on_sample(const Address& addr, const Distribution& d) = 0;
  virtual void on_factor(const Address& addr, double score) = 0;

  /// Resets address stack and store before a fresh execution.
  void reset_execution_state();

 private:
  struct Frame {
    Frame(RuntimeHandle& h, Site s) : handle(h) { handle.stack_.path.push_back(s); }
    ~Frame() { handle.stack_.path.pop_back(); }
    Frame(const Frame&) = delete;
    Frame& operator=(const Frame&) = delete;
    RuntimeHandle& handle;
  };

  Address stack_;
  Store store_;
};

/// A generative process: a body that routes all randomness and scoring
/// through the handle and is otherwise pure.
using ModelProgram = std::function<Value(RuntimeHandle&)>;

}  // namespace ctf
