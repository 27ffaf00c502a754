#ifndef PT__RUNTIME_HPP_
#define PT__RUNTIME_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "pt/trace_model.hpp"

namespace pt::runtime
{

/// Process-unique object/message identifier from a single atomic counter.
uint64_t next_handle();

struct Message
{
  Handle handle;
  std::shared_ptr<const std::vector<uint8_t>> data;
  uint64_t source_timestamp_ns = 0;
};

using SubscriptionCallback = std::function<void (const Message &)>;
using TimerCallback = std::function<void ()>;
using ServiceCallback = std::function<std::vector<uint8_t>(const std::vector<uint8_t> &)>;

enum class LifecycleState : uint8_t {unconfigured, inactive, active, finalized};

std::string_view to_string(LifecycleState state);

class Context;
class Node;
class Executor;

class Publisher
{
public:
  /// Emits the publish-path chain (api, core, transport) and delivers the
  /// message to every matching subscription queue. Throws
  /// Error{inactive_lifecycle_node} when the owning lifecycle node is not
  /// Active; no publish-path event is emitted in that case.
  void publish(std::span<const uint8_t> data);

  Handle handle() const {return handle_;}
  Handle transport_handle() const {return transport_handle_;}
  const std::string & topic() const {return topic_;}
  Node & node() {return *node_;}

private:
  friend class Node;
  Publisher(Node & node, std::string topic, uint32_t queue_depth);

  Node * node_;
  Handle handle_;
  Handle transport_handle_;
  std::string topic_;
  uint32_t queue_depth_;
};

class Subscription
{
public:
  Handle handle() const {return handle_;}
  Handle transport_handle() const {return transport_handle_;}
  Handle callback_handle() const {return callback_handle_;}
  const std::string & topic() const {return topic_;}
  Node & node() {return *node_;}
  std::size_t queued() const;

private:
  friend class Node;
  friend class Context;
  friend class Executor;
  Subscription(
    Node & node, std::string topic, uint32_t queue_depth,
    SubscriptionCallback callback, std::string symbol);

  void enqueue(Message message);
  std::optional<Message> pop();

  Node * node_;
  Handle handle_;
  Handle transport_handle_;
  Handle api_handle_;
  Handle callback_handle_;
  std::string topic_;
  uint32_t queue_depth_;
  SubscriptionCallback callback_;

  mutable std::mutex queue_mutex_;
  std::deque<Message> queue_;
  bool in_flight_ = false;  // guarded by the owning executor's mutex
};

class Timer
{
public:
  Handle handle() const {return handle_;}
  Handle callback_handle() const {return callback_handle_;}
  int64_t period_ns() const {return period_ns_;}
  Node & node() {return *node_;}

private:
  friend class Node;
  friend class Executor;
  Timer(Node & node, int64_t period_ns, TimerCallback callback, std::string symbol);

  Node * node_;
  Handle handle_;
  Handle callback_handle_;
  int64_t period_ns_;
  TimerCallback callback_;

  uint64_t next_due_ns_ = 0;  // guarded by the owning executor's mutex
  bool in_flight_ = false;
};

class Service
{
public:
  Handle handle() const {return handle_;}
  Handle callback_handle() const {return callback_handle_;}
  const std::string & name() const {return name_;}
  Node & node() {return *node_;}

private:
  friend class Node;
  friend class Client;
  friend class Executor;
  Service(Node & node, std::string name, ServiceCallback callback, std::string symbol);

  struct PendingCall
  {
    std::vector<uint8_t> request;
    std::promise<std::vector<uint8_t>> response;
  };

  Node * node_;
  Handle handle_;
  Handle transport_handle_;
  Handle callback_handle_;
  std::string name_;
  ServiceCallback callback_;

  std::mutex queue_mutex_;
  std::deque<PendingCall> pending_;
  bool in_flight_ = false;
};

class Client
{
public:
  /// Delivers the request to the matching service through its executor and
  /// blocks for the response. Throws Error{unknown_service} when no service
  /// with this name exists. Must not be called from the executor thread that
  /// serves the target service.
  std::vector<uint8_t> call(std::span<const uint8_t> request);

  Handle handle() const {return handle_;}
  const std::string & service_name() const {return name_;}

private:
  friend class Node;
  Client(Node & node, std::string name);

  Node * node_;
  Handle handle_;
  Handle transport_handle_;
  std::string name_;
};

class Node
{
public:
  std::shared_ptr<Publisher> create_publisher(const std::string & topic, uint32_t queue_depth);
  std::shared_ptr<Subscription> create_subscription(
    const std::string & topic, uint32_t queue_depth,
    SubscriptionCallback callback, const std::string & symbol = "");
  std::shared_ptr<Timer> create_timer(
    int64_t period_ns, TimerCallback callback, const std::string & symbol = "");
  std::shared_ptr<Service> create_service(
    const std::string & name, ServiceCallback callback, const std::string & symbol = "");
  std::shared_ptr<Client> create_client(const std::string & name);

  /// Applies one of configure/activate/deactivate/cleanup/shutdown and emits
  /// the transition event. Throws Error{illegal_transition}.
  LifecycleState lifecycle_transition(const std::string & transition_label);

  bool is_lifecycle() const {return state_machine_.has_value();}
  std::optional<LifecycleState> lifecycle_state() const;

  Handle handle() const {return handle_;}
  Handle transport_handle() const {return transport_handle_;}
  const std::string & name() const {return name_;}
  const std::string & node_namespace() const {return namespace_;}
  Context & context() {return *context_;}

private:
  friend class Context;
  friend class Executor;
  friend class Publisher;
  friend class Client;
  Node(Context & context, std::string name, std::string node_namespace, bool lifecycle);

  Context * context_;
  Handle handle_;
  Handle transport_handle_;
  std::string name_;
  std::string namespace_;

  struct StateMachine
  {
    Handle handle;
    LifecycleState state = LifecycleState::unconfigured;
  };
  std::optional<StateMachine> state_machine_;
  mutable std::mutex lifecycle_mutex_;

  std::vector<std::shared_ptr<Publisher>> publishers_;
  std::vector<std::shared_ptr<Subscription>> subscriptions_;
  std::vector<std::shared_ptr<Timer>> timers_;
  std::vector<std::shared_ptr<Service>> services_;
  std::vector<std::shared_ptr<Client>> clients_;

  std::atomic<Executor *> executor_{nullptr};
};

/// The runtime context: owns nodes, routes intra-process messages, resolves
/// services. Object creation belongs to the initialization phase; creating
/// objects while an executor is spinning is unsupported.
class Context
{
public:
  Context();
  ~Context() = default;
  Context(const Context &) = delete;
  Context & operator=(const Context &) = delete;

  std::shared_ptr<Node> create_node(
    const std::string & name, const std::string & node_namespace = "/");
  std::shared_ptr<Node> create_lifecycle_node(
    const std::string & name, const std::string & node_namespace = "/");

  Handle handle() const {return handle_;}
  const std::vector<std::shared_ptr<Node>> & nodes() const {return nodes_;}

private:
  friend class Publisher;
  friend class Node;
  friend class Client;

  void register_subscription(const std::shared_ptr<Subscription> & subscription);
  void register_service(const std::shared_ptr<Service> & service);
  void deliver(const std::string & topic, const Message & message);
  Service * find_service(const std::string & name);

  Handle handle_;
  std::vector<std::shared_ptr<Node>> nodes_;
  mutable std::shared_mutex graph_mutex_;
  std::unordered_map<std::string, std::vector<std::shared_ptr<Subscription>>> topic_index_;
  std::unordered_map<std::string, std::shared_ptr<Service>> service_index_;
};

struct SpinOptions
{
  std::optional<std::chrono::nanoseconds> max_duration;
  std::optional<uint64_t> max_executions;
  std::atomic<bool> * shutdown_flag = nullptr;
  std::chrono::nanoseconds wait_timeout = std::chrono::milliseconds(100);
};

/// Callback scheduler. Single-threaded mode runs on the calling thread;
/// multi-threaded mode dispatches to n workers. Readiness is FIFO per kind,
/// timers first, and an in-flight guard keeps each subscription/timer/service
/// to one running instance at a time.
class Executor
{
public:
  static Executor single_threaded() {return Executor(1);}
  static Executor multi_threaded(unsigned threads) {return Executor(threads);}
  explicit Executor(unsigned threads = 1);
  ~Executor();
  Executor(const Executor &) = delete;
  Executor & operator=(const Executor &) = delete;

  void add_node(const std::shared_ptr<Node> & node);

  /// Runs worker loops until a stop condition holds. Throws Error{no_nodes}
  /// when no node was added; rethrows the first callback exception.
  void spin(const SpinOptions & options);

  /// Convenience: spin until exactly n callback executions completed.
  void spin_work(uint64_t n);
  void spin_for(std::chrono::nanoseconds duration);

  /// Interrupts a concurrent spin.
  void shutdown();

  unsigned threads() const {return threads_;}
  uint64_t executed_total() const {return executed_total_.load();}

  /// Wakes workers; called by the runtime when new work arrives.
  void notify();

private:
  struct WorkUnit;
  struct SpinState;

  void worker_loop(SpinState & spin_state);
  bool try_claim(SpinState & spin_state, WorkUnit & unit, uint64_t now_ns);
  void process(WorkUnit & unit);
  void finish_unit(WorkUnit & unit);

  unsigned threads_;
  std::vector<std::shared_ptr<Node>> nodes_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::atomic<bool> shutdown_{false};
  std::atomic<bool> spinning_{false};
  std::atomic<uint64_t> executed_total_{0};
};

}  // namespace pt::runtime

#endif  // PT__RUNTIME_HPP_
