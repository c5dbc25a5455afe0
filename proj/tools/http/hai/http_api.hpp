#pragma once

// /v1 HTTP binding of the HITL service. Error responses carry `{code, message}`.

namespace httplib {
class Server;
}

namespace hai {

class HitlService;

namespace http {

void register_routes(httplib::Server& server, HitlService& service);

}  // namespace http
}  // namespace hai
