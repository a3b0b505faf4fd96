import { GatewayClient } from "./api.js";
import { wireApp } from "./app.js";
import { SessionController } from "./state.js";

const controller = new SessionController(new GatewayClient(""));
wireApp(document, controller);
void controller.start().then(() => controller.loadRecommendations());
