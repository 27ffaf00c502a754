#include "pt/runtime.hpp"

#include <unistd.h>

#include <algorithm>
#include <exception>
#include <utility>

#include "pt/clock.hpp"
#include "pt/error.hpp"
#include "pt/recorder.hpp"
#include "pt/version.hpp"

namespace pt::runtime
{

namespace
{

uint64_t clamp_non_negative(int64_t value)
{
  return value > 0 ? static_cast<uint64_t>(value) : 0;
}

}  // namespace

uint64_t next_handle()
{
  // seeded per process so merged multi-process traces keep handles distinct
  static std::atomic<uint64_t> counter{(static_cast<uint64_t>(::getpid()) << 32) + 1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

std::string_view to_string(LifecycleState state)
{
  switch (state) {
    case LifecycleState::unconfigured: return "unconfigured";
    case LifecycleState::inactive: return "inactive";
    case LifecycleState::active: return "active";
    case LifecycleState::finalized: return "finalized";
  }
  return "?";
}

// ---------------------------------------------------------------- Context

Context::Context()
: handle_{next_handle()}
{
  if (tracepoint_enabled(TracepointId::core_init)) {
    emit_event(TracepointId::core_init, {handle_, std::string(kToolVersion)});
  }
}

std::shared_ptr<Node> Context::create_node(
  const std::string & name, const std::string & node_namespace)
{
  std::unique_lock lock(graph_mutex_);
  for (const auto & node : nodes_) {
    if (node->name() == name && node->node_namespace() == node_namespace) {
      throw Error(
              ErrorCode::duplicate_node_name, node_namespace + name + " already exists");
    }
  }
  auto node = std::shared_ptr<Node>(new Node(*this, name, node_namespace, false));
  nodes_.push_back(node);
  return node;
}

std::shared_ptr<Node> Context::create_lifecycle_node(
  const std::string & name, const std::string & node_namespace)
{
  std::unique_lock lock(graph_mutex_);
  for (const auto & node : nodes_) {
    if (node->name() == name && node->node_namespace() == node_namespace) {
      throw Error(
              ErrorCode::duplicate_node_name, node_namespace + name + " already exists");
    }
  }
  auto node = std::shared_ptr<Node>(new Node(*this, name, node_namespace, true));
  nodes_.push_back(node);
  return node;
}

void Context::register_subscription(const std::shared_ptr<Subscription> & subscription)
{
  std::unique_lock lock(graph_mutex_);
  topic_index_[subscription->topic()].push_back(subscription);
}

void Context::register_service(const std::shared_ptr<Service> & service)
{
  std::unique_lock lock(graph_mutex_);
  service_index_[service->name()] = service;
}

void Context::deliver(const std::string & topic, const Message & message)
{
  std::shared_lock lock(graph_mutex_);
  const auto it = topic_index_.find(topic);
  if (it == topic_index_.end()) {
    return;
  }
  for (const auto & subscription : it->second) {
    subscription->enqueue(message);
    Executor * executor = subscription->node_->executor_.load(std::memory_order_acquire);
    if (executor != nullptr) {
      executor->notify();
    }
  }
}

Service * Context::find_service(const std::string & name)
{
  std::shared_lock lock(graph_mutex_);
  const auto it = service_index_.find(name);
  return it == service_index_.end() ? nullptr : it->second.get();
}

// ---------------------------------------------------------------- Node

Node::Node(Context & context, std::string name, std::string node_namespace, bool lifecycle)
: context_(&context),
  handle_{next_handle()},
  transport_handle_{next_handle()},
  name_(std::move(name)),
  namespace_(std::move(node_namespace))
{
  if (tracepoint_enabled(TracepointId::core_node_init)) {
    emit_event(
      TracepointId::core_node_init,
      {handle_, transport_handle_, std::string(name_), std::string(namespace_)});
  }
  if (lifecycle) {
    state_machine_ = StateMachine{Handle{next_handle()}, LifecycleState::unconfigured};
    if (tracepoint_enabled(TracepointId::core_lifecycle_state_machine_init)) {
      emit_event(
        TracepointId::core_lifecycle_state_machine_init, {handle_, state_machine_->handle});
    }
  }
}

std::shared_ptr<Publisher> Node::create_publisher(const std::string & topic, uint32_t queue_depth)
{
  if (topic.empty()) {
    throw Error(ErrorCode::invalid_config, "publisher topic must be non-empty");
  }
  auto publisher = std::shared_ptr<Publisher>(new Publisher(*this, topic, queue_depth));
  publishers_.push_back(publisher);
  return publisher;
}

std::shared_ptr<Subscription> Node::create_subscription(
  const std::string & topic, uint32_t queue_depth,
  SubscriptionCallback callback, const std::string & symbol)
{
  if (topic.empty()) {
    throw Error(ErrorCode::invalid_config, "subscription topic must be non-empty");
  }
  auto subscription = std::shared_ptr<Subscription>(
    new Subscription(*this, topic, queue_depth, std::move(callback), symbol));
  subscriptions_.push_back(subscription);
  context_->register_subscription(subscription);
  return subscription;
}

std::shared_ptr<Timer> Node::create_timer(
  int64_t period_ns, TimerCallback callback, const std::string & symbol)
{
  if (period_ns <= 0) {
    throw Error(ErrorCode::invalid_period, std::to_string(period_ns) + " ns");
  }
  auto timer = std::shared_ptr<Timer>(new Timer(*this, period_ns, std::move(callback), symbol));
  timers_.push_back(timer);
  return timer;
}

std::shared_ptr<Service> Node::create_service(
  const std::string & name, ServiceCallback callback, const std::string & symbol)
{
  auto service = std::shared_ptr<Service>(
    new Service(*this, name, std::move(callback), symbol));
  services_.push_back(service);
  context_->register_service(service);
  return service;
}

std::shared_ptr<Client> Node::create_client(const std::string & name)
{
  auto client = std::shared_ptr<Client>(new Client(*this, name));
  clients_.push_back(client);
  return client;
}

LifecycleState Node::lifecycle_transition(const std::string & transition_label)
{
  if (!state_machine_) {
    throw Error(
            ErrorCode::illegal_transition, "node '" + name_ + "' is not lifecycle-managed");
  }
  std::lock_guard lock(lifecycle_mutex_);
  const LifecycleState from = state_machine_->state;
  LifecycleState to;
  if (transition_label == "configure" && from == LifecycleState::unconfigured) {
    to = LifecycleState::inactive;
  } else if (transition_label == "activate" && from == LifecycleState::inactive) {
    to = LifecycleState::active;
  } else if (transition_label == "deactivate" && from == LifecycleState::active) {
    to = LifecycleState::inactive;
  } else if (transition_label == "cleanup" && from == LifecycleState::inactive) {
    to = LifecycleState::unconfigured;
  } else if (transition_label == "shutdown") {
    to = LifecycleState::finalized;
  } else {
    throw Error(
            ErrorCode::illegal_transition,
            "'" + transition_label + "' from state '" + std::string(to_string(from)) + "'");
  }
  state_machine_->state = to;
  if (tracepoint_enabled(TracepointId::core_lifecycle_transition)) {
    emit_event(
      TracepointId::core_lifecycle_transition,
      {state_machine_->handle, std::string(to_string(from)), std::string(to_string(to))});
  }
  return to;
}

std::optional<LifecycleState> Node::lifecycle_state() const
{
  if (!state_machine_) {
    return std::nullopt;
  }
  std::lock_guard lock(lifecycle_mutex_);
  return state_machine_->state;
}

// ---------------------------------------------------------------- Publisher

Publisher::Publisher(Node & node, std::string topic, uint32_t queue_depth)
: node_(&node),
  handle_{next_handle()},
  transport_handle_{next_handle()},
  topic_(std::move(topic)),
  queue_depth_(queue_depth)
{
  if (tracepoint_enabled(TracepointId::transport_publisher_init)) {
    emit_event(
      TracepointId::transport_publisher_init, {transport_handle_, uint64_t{next_handle()}});
  }
  if (tracepoint_enabled(TracepointId::core_publisher_init)) {
    emit_event(
      TracepointId::core_publisher_init,
      {handle_, node.handle(), std::string(topic_), uint64_t{queue_depth_}});
  }
}

void Publisher::publish(std::span<const uint8_t> data)
{
  if (node_->state_machine_) {
    std::lock_guard lock(node_->lifecycle_mutex_);
    if (node_->state_machine_->state != LifecycleState::active) {
      throw Error(
              ErrorCode::inactive_lifecycle_node,
              "node '" + node_->name() + "' is " +
              std::string(to_string(node_->state_machine_->state)));
    }
  }
  const Handle message{next_handle()};
  const uint64_t source_timestamp_ns = monotonic_now_ns();
  if (tracepoint_enabled(TracepointId::api_publish)) {
    emit_event(TracepointId::api_publish, {message});
  }
  if (tracepoint_enabled(TracepointId::core_publish)) {
    emit_event(TracepointId::core_publish, {handle_, message});
  }
  if (tracepoint_enabled(TracepointId::transport_publish)) {
    emit_event(TracepointId::transport_publish, {message});
  }
  Message delivered;
  delivered.handle = message;
  delivered.data = std::make_shared<const std::vector<uint8_t>>(data.begin(), data.end());
  delivered.source_timestamp_ns = source_timestamp_ns;
  node_->context_->deliver(topic_, delivered);
}

// ---------------------------------------------------------------- Subscription

Subscription::Subscription(
  Node & node, std::string topic, uint32_t queue_depth,
  SubscriptionCallback callback, std::string symbol)
: node_(&node),
  handle_{next_handle()},
  transport_handle_{next_handle()},
  api_handle_{next_handle()},
  callback_handle_{next_handle()},
  topic_(std::move(topic)),
  queue_depth_(queue_depth),
  callback_(std::move(callback))
{
  if (tracepoint_enabled(TracepointId::transport_subscription_init)) {
    emit_event(
      TracepointId::transport_subscription_init, {transport_handle_, uint64_t{next_handle()}});
  }
  if (tracepoint_enabled(TracepointId::core_subscription_init)) {
    emit_event(
      TracepointId::core_subscription_init,
      {handle_, node.handle(), std::string(topic_), uint64_t{queue_depth_}});
  }
  if (tracepoint_enabled(TracepointId::api_subscription_init)) {
    emit_event(TracepointId::api_subscription_init, {handle_, api_handle_});
  }
  if (tracepoint_enabled(TracepointId::api_subscription_callback_added)) {
    emit_event(TracepointId::api_subscription_callback_added, {api_handle_, callback_handle_});
  }
  if (tracepoint_enabled(TracepointId::api_callback_register)) {
    emit_event(
      TracepointId::api_callback_register, {callback_handle_, std::string(symbol)});
  }
}

void Subscription::enqueue(Message message)
{
  std::lock_guard lock(queue_mutex_);
  queue_.push_back(std::move(message));
  if (queue_.size() > queue_depth_) {
    queue_.pop_front();  // bounded queue, oldest dropped
  }
}

std::optional<Message> Subscription::pop()
{
  std::lock_guard lock(queue_mutex_);
  if (queue_.empty()) {
    return std::nullopt;
  }
  Message front = std::move(queue_.front());
  queue_.pop_front();
  return front;
}

std::size_t Subscription::queued() const
{
  std::lock_guard lock(queue_mutex_);
  return queue_.size();
}

// ---------------------------------------------------------------- Timer

Timer::Timer(Node & node, int64_t period_ns, TimerCallback callback, std::string symbol)
: node_(&node),
  handle_{next_handle()},
  callback_handle_{next_handle()},
  period_ns_(period_ns),
  callback_(std::move(callback)),
  next_due_ns_(monotonic_now_ns() + static_cast<uint64_t>(period_ns))
{
  if (tracepoint_enabled(TracepointId::core_timer_init)) {
    emit_event(TracepointId::core_timer_init, {handle_, int64_t{period_ns_}});
  }
  if (tracepoint_enabled(TracepointId::api_timer_callback_added)) {
    emit_event(TracepointId::api_timer_callback_added, {handle_, callback_handle_});
  }
  if (tracepoint_enabled(TracepointId::api_callback_register)) {
    emit_event(TracepointId::api_callback_register, {callback_handle_, std::string(symbol)});
  }
  if (tracepoint_enabled(TracepointId::api_timer_link_node)) {
    emit_event(TracepointId::api_timer_link_node, {handle_, node.handle()});
  }
}

// ---------------------------------------------------------------- Service

Service::Service(Node & node, std::string name, ServiceCallback callback, std::string symbol)
: node_(&node),
  handle_{next_handle()},
  transport_handle_{next_handle()},
  callback_handle_{next_handle()},
  name_(std::move(name)),
  callback_(std::move(callback))
{
  if (tracepoint_enabled(TracepointId::core_service_init)) {
    emit_event(
      TracepointId::core_service_init,
      {handle_, node.handle(), transport_handle_, std::string(name_)});
  }
  if (tracepoint_enabled(TracepointId::api_service_callback_added)) {
    emit_event(TracepointId::api_service_callback_added, {handle_, callback_handle_});
  }
  if (tracepoint_enabled(TracepointId::api_callback_register)) {
    emit_event(TracepointId::api_callback_register, {callback_handle_, std::string(symbol)});
  }
}

// ---------------------------------------------------------------- Client

Client::Client(Node & node, std::string name)
: node_(&node),
  handle_{next_handle()},
  transport_handle_{next_handle()},
  name_(std::move(name))
{
  if (tracepoint_enabled(TracepointId::core_client_init)) {
    emit_event(
      TracepointId::core_client_init,
      {handle_, node.handle(), transport_handle_, std::string(name_)});
  }
}

std::vector<uint8_t> Client::call(std::span<const uint8_t> request)
{
  Service * service = node_->context_->find_service(name_);
  if (service == nullptr) {
    throw Error(ErrorCode::unknown_service, "'" + name_ + "'");
  }
  std::future<std::vector<uint8_t>> response;
  {
    std::lock_guard lock(service->queue_mutex_);
    Service::PendingCall call;
    call.request.assign(request.begin(), request.end());
    response = call.response.get_future();
    service->pending_.push_back(std::move(call));
  }
  Executor * executor = service->node_->executor_.load(std::memory_order_acquire);
  if (executor != nullptr) {
    executor->notify();
  }
  return response.get();
}

// ---------------------------------------------------------------- Executor

struct Executor::WorkUnit
{
  enum class Kind {none, timer, subscription, service} kind = Kind::none;
  Timer * timer = nullptr;
  Subscription * subscription = nullptr;
  Message message;
  Service * service = nullptr;
  std::optional<Service::PendingCall> call;
};

struct Executor::SpinState
{
  std::optional<uint64_t> deadline_ns;
  std::optional<uint64_t> max_executions;
  std::atomic<bool> * external_shutdown = nullptr;
  int64_t wait_timeout_ns = 0;
  uint64_t claimed = 0;  // guarded by mutex_
  std::exception_ptr error;  // guarded by mutex_
};

Executor::Executor(unsigned threads)
: threads_(threads == 0 ? 1 : threads)
{
}

Executor::~Executor()
{
  shutdown();
}

void Executor::add_node(const std::shared_ptr<Node> & node)
{
  nodes_.push_back(node);
  node->executor_.store(this, std::memory_order_release);
}

void Executor::notify()
{
  {
    std::lock_guard lock(mutex_);
  }
  cv_.notify_all();
}

void Executor::shutdown()
{
  shutdown_.store(true, std::memory_order_release);
  cv_.notify_all();
}

void Executor::spin_work(uint64_t n)
{
  SpinOptions options;
  options.max_executions = n;
  spin(options);
}

void Executor::spin_for(std::chrono::nanoseconds duration)
{
  SpinOptions options;
  options.max_duration = duration;
  spin(options);
}

void Executor::spin(const SpinOptions & options)
{
  if (nodes_.empty()) {
    throw Error(ErrorCode::no_nodes, "executor has no nodes");
  }
  if (spinning_.exchange(true)) {
    throw Error(ErrorCode::invalid_config, "executor is already spinning");
  }
  shutdown_.store(false, std::memory_order_release);

  SpinState spin_state;
  if (options.max_duration) {
    spin_state.deadline_ns =
      monotonic_now_ns() + static_cast<uint64_t>(options.max_duration->count());
  }
  spin_state.max_executions = options.max_executions;
  spin_state.external_shutdown = options.shutdown_flag;
  spin_state.wait_timeout_ns = options.wait_timeout.count();

  if (threads_ == 1) {
    worker_loop(spin_state);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(threads_);
    for (unsigned i = 0; i < threads_; ++i) {
      workers.emplace_back([this, &spin_state]() {worker_loop(spin_state);});
    }
    for (auto & worker : workers) {
      worker.join();
    }
  }

  spinning_.store(false, std::memory_order_release);
  std::exception_ptr error;
  {
    std::lock_guard lock(mutex_);
    error = spin_state.error;
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

void Executor::worker_loop(SpinState & spin_state)
{
  for (;;) {
    if (shutdown_.load(std::memory_order_acquire)) {
      return;
    }
    if (spin_state.external_shutdown != nullptr &&
      spin_state.external_shutdown->load(std::memory_order_acquire))
    {
      return;
    }
    uint64_t now = monotonic_now_ns();
    if (spin_state.deadline_ns && now >= *spin_state.deadline_ns) {
      return;
    }

    int64_t timeout_ns = spin_state.wait_timeout_ns;
    {
      std::lock_guard lock(mutex_);
      if (spin_state.error) {
        return;
      }
      if (spin_state.max_executions && spin_state.claimed >= *spin_state.max_executions) {
        return;
      }
      for (const auto & node : nodes_) {
        for (const auto & timer : node->timers_) {
          if (timer->in_flight_) {
            continue;
          }
          const int64_t until_due =
            static_cast<int64_t>(timer->next_due_ns_) - static_cast<int64_t>(now);
          timeout_ns = std::min(timeout_ns, until_due);
        }
      }
    }
    if (spin_state.deadline_ns) {
      timeout_ns = std::min(
        timeout_ns, static_cast<int64_t>(*spin_state.deadline_ns) - static_cast<int64_t>(now));
    }
    if (timeout_ns < 0) {
      timeout_ns = 0;
    }

    if (tracepoint_enabled(TracepointId::api_executor_wait_for_work)) {
      emit_event(TracepointId::api_executor_wait_for_work, {int64_t{timeout_ns}});
    }

    WorkUnit unit;
    bool claimed = false;
    {
      std::unique_lock lock(mutex_);
      claimed = try_claim(spin_state, unit, monotonic_now_ns());
      if (!claimed && timeout_ns > 0 && !shutdown_.load(std::memory_order_acquire)) {
        const auto wake_at = std::chrono::steady_clock::time_point(
          std::chrono::nanoseconds(now + clamp_non_negative(timeout_ns)));
        cv_.wait_until(lock, wake_at);
        claimed = try_claim(spin_state, unit, monotonic_now_ns());
      }
    }
    if (!claimed) {
      continue;
    }

    if (tracepoint_enabled(TracepointId::api_executor_get_next_ready)) {
      emit_event(TracepointId::api_executor_get_next_ready, {});
    }
    try {
      process(unit);
    } catch (...) {
      {
        std::lock_guard lock(mutex_);
        if (!spin_state.error) {
          spin_state.error = std::current_exception();
        }
        finish_unit(unit);
      }
      shutdown_.store(true, std::memory_order_release);
      cv_.notify_all();
      return;
    }
    executed_total_.fetch_add(1, std::memory_order_relaxed);
    {
      std::lock_guard lock(mutex_);
      finish_unit(unit);
    }
    cv_.notify_all();
  }
}

bool Executor::try_claim(SpinState & spin_state, WorkUnit & unit, uint64_t now_ns)
{
  if (spin_state.max_executions && spin_state.claimed >= *spin_state.max_executions) {
    return false;
  }

  // timers first, earliest due wins
  Timer * due_timer = nullptr;
  for (const auto & node : nodes_) {
    for (const auto & timer : node->timers_) {
      if (timer->in_flight_ || timer->next_due_ns_ > now_ns) {
        continue;
      }
      if (due_timer == nullptr || timer->next_due_ns_ < due_timer->next_due_ns_) {
        due_timer = timer.get();
      }
    }
  }
  if (due_timer != nullptr) {
    due_timer->in_flight_ = true;
    // one late fire at most, no burst catch-up
    due_timer->next_due_ns_ += static_cast<uint64_t>(due_timer->period_ns_);
    if (due_timer->next_due_ns_ <= now_ns) {
      due_timer->next_due_ns_ = now_ns + static_cast<uint64_t>(due_timer->period_ns_);
    }
    unit.kind = WorkUnit::Kind::timer;
    unit.timer = due_timer;
    ++spin_state.claimed;
    return true;
  }

  for (const auto & node : nodes_) {
    for (const auto & subscription : node->subscriptions_) {
      if (subscription->in_flight_) {
        continue;
      }
      auto message = subscription->pop();
      if (message) {
        subscription->in_flight_ = true;
        unit.kind = WorkUnit::Kind::subscription;
        unit.subscription = subscription.get();
        unit.message = std::move(*message);
        ++spin_state.claimed;
        return true;
      }
    }
  }

  for (const auto & node : nodes_) {
    for (const auto & service : node->services_) {
      if (service->in_flight_) {
        continue;
      }
      std::optional<Service::PendingCall> call;
      {
        std::lock_guard lock(service->queue_mutex_);
        if (!service->pending_.empty()) {
          call = std::move(service->pending_.front());
          service->pending_.pop_front();
        }
      }
      if (call) {
        service->in_flight_ = true;
        unit.kind = WorkUnit::Kind::service;
        unit.service = service.get();
        unit.call = std::move(call);
        ++spin_state.claimed;
        return true;
      }
    }
  }
  return false;
}

void Executor::finish_unit(WorkUnit & unit)
{
  switch (unit.kind) {
    case WorkUnit::Kind::timer:
      unit.timer->in_flight_ = false;
      break;
    case WorkUnit::Kind::subscription:
      unit.subscription->in_flight_ = false;
      break;
    case WorkUnit::Kind::service:
      unit.service->in_flight_ = false;
      break;
    case WorkUnit::Kind::none:
      break;
  }
}

void Executor::process(WorkUnit & unit)
{
  switch (unit.kind) {
    case WorkUnit::Kind::timer: {
        Timer * timer = unit.timer;
        if (tracepoint_enabled(TracepointId::api_executor_execute)) {
          emit_event(TracepointId::api_executor_execute, {timer->handle_});
        }
        if (tracepoint_enabled(TracepointId::callback_start)) {
          emit_event(TracepointId::callback_start, {timer->callback_handle_, false});
        }
        timer->callback_();
        if (tracepoint_enabled(TracepointId::callback_end)) {
          emit_event(TracepointId::callback_end, {timer->callback_handle_});
        }
        break;
      }
    case WorkUnit::Kind::subscription: {
        Subscription * subscription = unit.subscription;
        const Message & message = unit.message;
        if (tracepoint_enabled(TracepointId::api_executor_execute)) {
          emit_event(TracepointId::api_executor_execute, {subscription->handle_});
        }
        if (tracepoint_enabled(TracepointId::transport_take)) {
          emit_event(
            TracepointId::transport_take,
            {subscription->transport_handle_, message.handle,
              static_cast<int64_t>(message.source_timestamp_ns), true});
        }
        if (tracepoint_enabled(TracepointId::core_take)) {
          emit_event(TracepointId::core_take, {message.handle});
        }
        if (tracepoint_enabled(TracepointId::api_take)) {
          emit_event(TracepointId::api_take, {message.handle});
        }
        if (tracepoint_enabled(TracepointId::callback_start)) {
          emit_event(TracepointId::callback_start, {subscription->callback_handle_, true});
        }
        subscription->callback_(message);
        if (tracepoint_enabled(TracepointId::callback_end)) {
          emit_event(TracepointId::callback_end, {subscription->callback_handle_});
        }
        break;
      }
    case WorkUnit::Kind::service: {
        Service * service = unit.service;
        if (tracepoint_enabled(TracepointId::api_executor_execute)) {
          emit_event(TracepointId::api_executor_execute, {service->handle_});
        }
        if (tracepoint_enabled(TracepointId::callback_start)) {
          emit_event(TracepointId::callback_start, {service->callback_handle_, false});
        }
        std::vector<uint8_t> response;
        try {
          response = service->callback_(unit.call->request);
        } catch (...) {
          unit.call->response.set_exception(std::current_exception());
          throw;
        }
        if (tracepoint_enabled(TracepointId::callback_end)) {
          emit_event(TracepointId::callback_end, {service->callback_handle_});
        }
        unit.call->response.set_value(std::move(response));
        break;
      }
    case WorkUnit::Kind::none:
      break;
  }
}

}  // namespace pt::runtime
