#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "nom/runtime.hpp"

namespace nom {

enum class TxStatus : std::uint8_t {
  Committed,
  RevertedOutOfGas,
  RevertedDeadlock,
  Rejected,  // refused before booting; gas returned
  Failed,    // internal error (fuel without deadlock, ill-typed state)
};
std::string to_string(TxStatus s);

// One submitted transaction: a transaction-mode process from the
// signature, its value arguments, the contract addresses it touches, and
// the gas the sender attaches.
struct TxRequest {
  std::string proc;
  std::vector<RtVal> args;
  std::vector<std::string> contracts;
  std::int64_t gas = 0;
};

struct TxRecord {
  std::int64_t id = 0;
  TxRequest request;
  TxStatus status = TxStatus::Failed;
  // For committed transactions: work performed plus potential retained by
  // contract state; supplied − gas_used was refunded. For reverted ones:
  // the whole supply (forfeited to the miner). For rejected ones: zero.
  std::int64_t gas_used = 0;
  std::int64_t refund = 0;
  std::vector<std::string> acquires;  // contract addresses in acquire order
  std::string note;                   // failure detail, empty otherwise
};

struct LedgerOptions {
  std::uint64_t seed = 0;
  std::int64_t fuel = 1000000;
  bool assert_checks = false;  // per-step re-typecheck + energy assertion
  std::ostream* trace = nullptr;
};

struct ReplayReport {
  bool ok = true;
  std::int64_t divergences = 0;
  std::string detail;  // first divergence, human-readable
};

// A directory of deployed contracts plus a transaction queue, executed
// strictly in order against one persistent configuration. Committed
// transactions update the state; reverted ones restore it exactly.
class Ledger {
 public:
  explicit Ledger(std::shared_ptr<const Signature> sig,
                  LedgerOptions opts = {});

  // Boots a contract (shared mode, equi-synchronized interface) and runs
  // the configuration to quiescence. Unmetered: declared turnstiles are
  // minted. `chans` name channels made by earlier spawn_asset/deploy
  // calls. Returns the contract's address.
  std::string deploy(const std::string& proc, std::vector<RtVal> args = {},
                     std::vector<std::string> chans = {});

  // Boots a purely linear asset for use as a deploy argument.
  std::string spawn_asset(const std::string& proc,
                          std::vector<RtVal> args = {},
                          std::vector<std::string> chans = {});

  std::int64_t submit(TxRequest tx);
  bool pending() const { return !queue_.empty(); }
  TxRecord execute_next();
  void execute_all();
  void halt() { halted_ = true; }

  const Configuration& state() const { return c_; }
  const std::vector<TxRecord>& history() const { return history_; }
  std::vector<TxRecord>& history_mut() { return history_; }
  std::int64_t miner_account() const { return miner_; }
  // Mining-reward plumbing: whether the next transaction is the first of
  // the current block (the miner's dynamic check for reward contracts).
  bool first_tx_in_block() const { return first_in_block_; }
  void begin_block() { first_in_block_ = true; }

  // One line per transaction: `txId status gasSupplied gasUsed trace`,
  // trace = comma-separated acquire order, `-` when empty.
  void write_ledger_file(std::ostream& out) const;

  // Rebuilds a fresh ledger from the recorded genesis, re-executes the
  // whole history, and compares every outcome (status, gas, acquire
  // order) plus the final configuration.
  ReplayReport replay() const;

 private:
  struct Event {
    enum class K : std::uint8_t { Asset, Contract, Tx } k;
    // Asset / Contract:
    std::string proc;
    std::vector<RtVal> args;
    std::vector<std::string> chans;
    std::string address;
    // Tx: index into history_.
    std::size_t tx = 0;
  };

  std::string boot_genesis(const std::string& proc, std::vector<RtVal> args,
                           std::vector<std::string> chans, bool contract);
  void sweep_slack(std::int64_t& into);

  std::shared_ptr<const Signature> sig_;
  LedgerOptions opts_;
  Configuration c_;
  std::deque<std::pair<std::int64_t, TxRequest>> queue_;
  std::vector<TxRecord> history_;
  std::vector<Event> events_;
  std::int64_t next_tx_id_ = 0;
  std::int64_t miner_ = 0;        // forfeited gas plus genesis slack
  std::int64_t retired_work_ = 0; // work inside absorbed closing messages
  bool halted_ = false;
  bool first_in_block_ = true;
};

}  // namespace nom
